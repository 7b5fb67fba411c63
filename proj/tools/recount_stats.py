"""Recomputes stats.txt from a preprocessed corpus directory and diffs it."""

import argparse
import statistics
import sys
from pathlib import Path


def fmt(x):
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def recount(corpus_dir):
    corpus_dir = Path(corpus_dir)
    seq_len = {}
    doc_lens = []
    words = set()
    for line in (corpus_dir / "counts.tsv").read_text().splitlines():
        pid, t, _labels, counts = line.split("\t")
        seq_len[pid] = max(seq_len.get(pid, 0), int(t))
        if not counts:
            continue
        pairs = [p.split(":") for p in counts.split(" ")]
        words.update(w for w, _ in pairs)
        doc_lens.append(sum(int(c) for _, c in pairs))
    return {
        "# patients": fmt(len(seq_len)),
        "# unique words": fmt(len(words)),
        "Seq. len (median)": fmt(statistics.median(seq_len.values())),
        "Seq. len (max)": fmt(max(seq_len.values())),
        "Doc. len (median)": fmt(statistics.median(doc_lens)),
        "Doc. len (max)": fmt(max(doc_lens)),
    }


def read_stats(path):
    rows = (line.split("\t") for line in Path(path).read_text().splitlines() if line)
    return {k: v for k, v in rows}


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("corpus_dir")
    args = parser.parse_args(argv)
    expected = recount(args.corpus_dir)
    actual = read_stats(Path(args.corpus_dir) / "stats.txt")
    bad = [k for k in expected if k not in actual or float(actual[k]) != float(expected[k])]
    for k in bad:
        print(f"{k}: stats.txt {actual.get(k)} recount {expected[k]}", file=sys.stderr)
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
