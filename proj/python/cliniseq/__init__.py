"""Sequence models over clinical notes."""

from ._core import (
    CompatibilityError,
    InputError,
    NumericError,
    SvmModel,
    auc,
    categorical_ce,
    fit_lda,
    knn_overlap,
    knn_overlap_groups,
    load_checkpoint,
    normalize_text,
    planted_documents,
    planted_phi,
    run_cli,
    svm_objective,
    train_svm,
    weighted_ce,
)


def main(argv=None):
    import sys

    code, out, err = run_cli(list(sys.argv[1:] if argv is None else argv))
    sys.stdout.write(out)
    sys.stderr.write(err)
    return code
