#include "cliniseq/corpus_io.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "cliniseq/error.hpp"

namespace cliniseq::corpus {

namespace {

int parse_int(std::string_view s, std::string_view what) {
  int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw InputError("bad " + std::string(what) + " '" + std::string(s) + "'");
  return v;
}

std::vector<std::string_view> split_on(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

std::vector<std::string_view> lines_of(std::string_view content) {
  std::vector<std::string_view> out;
  for (auto line : split_on(content, '\n')) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

void expect_header(const std::vector<std::string>& got, std::initializer_list<std::string_view> want,
                   std::string_view file) {
  std::vector<std::string> w(want.begin(), want.end());
  if (got != w) throw InputError("unexpected header in " + std::string(file) + " file");
}

}  // namespace

Timestamp parse_timestamp(std::string_view text) {
  using namespace std::chrono;
  std::string_view s = text;
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  if (!s.empty() && s.back() == 'Z') s.remove_suffix(1);
  if (s.size() < 10 || s[4] != '-' || s[7] != '-') throw InputError("bad timestamp '" + std::string(text) + "'");
  const int y = parse_int(s.substr(0, 4), "year");
  const int mo = parse_int(s.substr(5, 2), "month");
  const int d = parse_int(s.substr(8, 2), "day");
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) throw InputError("bad date '" + std::string(text) + "'");
  int hh = 0, mm = 0, ss = 0;
  if (s.size() > 10) {
    if ((s[10] != ' ' && s[10] != 'T') || s.size() < 16 || s[13] != ':')
      throw InputError("bad timestamp '" + std::string(text) + "'");
    hh = parse_int(s.substr(11, 2), "hour");
    mm = parse_int(s.substr(14, 2), "minute");
    if (s.size() > 16) {
      if (s[16] != ':' || s.size() < 19) throw InputError("bad timestamp '" + std::string(text) + "'");
      // Fractional seconds are truncated.
      ss = parse_int(s.substr(17, 2), "second");
      if (s.size() > 19 && s[19] != '.') throw InputError("bad timestamp '" + std::string(text) + "'");
    }
    if (hh > 23 || mm > 59 || ss > 60) throw InputError("bad time of day '" + std::string(text) + "'");
  }
  const auto days_since_epoch = sys_days{ymd}.time_since_epoch().count();
  return static_cast<Timestamp>(days_since_epoch) * kDaySeconds + hh * 3600 + mm * 60 + ss;
}

std::string format_date(Timestamp t) {
  using namespace std::chrono;
  const auto day_index = static_cast<int>((t >= 0 ? t : t - kDaySeconds + 1) / kDaySeconds);
  const year_month_day ymd{sys_days{days{day_index}}};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()));
  return buf;
}

std::string format_timestamp(Timestamp t) {
  Timestamp secs = t % kDaySeconds;
  if (secs < 0) secs += kDaySeconds;
  char buf[16];
  std::snprintf(buf, sizeof buf, " %02d:%02d:%02d", static_cast<int>(secs / 3600), static_cast<int>(secs / 60 % 60),
                static_cast<int>(secs % 60));
  return format_date(t) + buf;
}

std::vector<std::vector<std::string>> parse_csv(std::string_view content) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false, field_started = false;
  std::size_t i = 0;
  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    if (!(row.size() == 1 && row[0].empty())) rows.push_back(std::move(row));
    row.clear();
  };
  while (i < content.size()) {
    const char c = content[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          field += '"';
          i += 2;
          continue;
        }
        in_quotes = false;
      } else {
        field += c;
      }
      ++i;
      continue;
    }
    if (c == '"' && !field_started) {
      in_quotes = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\r' && i + 1 < content.size() && content[i + 1] == '\n') {
      // handled by the '\n'
    } else if (c == '\n') {
      end_row();
    } else {
      field += c;
      field_started = true;
    }
    ++i;
  }
  if (in_quotes) throw InputError("unterminated quoted CSV field");
  if (field_started || !row.empty()) end_row();
  return rows;
}

std::string csv_field(std::string_view value) {
  if (value.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(value);
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string format_real(double x) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, p);
}

double parse_real(std::string_view text) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || p != text.data() + text.size())
    throw InputError("bad number '" + std::string(text) + "'");
  return v;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw InputError("write failed for " + path.string());
}

std::vector<RawNote> parse_notes_csv(std::string_view content) {
  auto rows = parse_csv(content);
  if (rows.empty()) return {};
  expect_header(rows[0], {"patient_id", "chart_time", "category", "text"}, "notes");
  std::vector<RawNote> notes;
  notes.reserve(rows.size() - 1);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    auto& row = rows[r];
    if (row.size() != 4)
      throw InputError("notes row " + std::to_string(r + 1) + ": expected 4 fields, got " + std::to_string(row.size()));
    if (row[0].empty()) throw InputError("notes row " + std::to_string(r + 1) + ": empty patient_id");
    notes.push_back({std::move(row[0]), parse_timestamp(row[1]), std::move(row[2]), std::move(row[3])});
  }
  return notes;
}

std::vector<RawNote> read_notes_csv(const std::filesystem::path& path) { return parse_notes_csv(read_file(path)); }

std::string format_notes_csv(std::span<const RawNote> notes) {
  std::string out = "patient_id,chart_time,category,text\n";
  for (const auto& n : notes) {
    out += csv_field(n.patient_id) + ',' + format_timestamp(n.chart_time) + ',' + csv_field(n.category) + ',' +
           csv_field(n.text) + '\n';
  }
  return out;
}

double age_in_years(Timestamp dob, Timestamp at) {
  return static_cast<double>(at - dob) / (365.2425 * static_cast<double>(kDaySeconds));
}

PatientMeta MetaRow::to_meta() const {
  PatientMeta m;
  m.patient_id = patient_id;
  m.age_at_admission = age_in_years(dob, admit_time);
  m.admit_time = admit_time;
  m.discharge_time = discharge_time;
  m.death_time = death_time;
  m.in_hospital_death = in_hospital_death;
  return m;
}

std::vector<MetaRow> parse_meta_csv(std::string_view content) {
  auto rows = parse_csv(content);
  if (rows.empty()) return {};
  expect_header(rows[0], {"patient_id", "dob", "admit_time", "discharge_time", "death_time", "in_hospital_death"},
                "metadata");
  std::vector<MetaRow> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != 6)
      throw InputError("metadata row " + std::to_string(r + 1) + ": expected 6 fields, got " +
                       std::to_string(row.size()));
    MetaRow m;
    m.patient_id = row[0];
    m.dob = parse_timestamp(row[1]);
    m.admit_time = parse_timestamp(row[2]);
    m.discharge_time = parse_timestamp(row[3]);
    if (!row[4].empty()) m.death_time = parse_timestamp(row[4]);
    const std::string& flag = row[5];
    if (flag == "1" || flag == "true" || flag == "True")
      m.in_hospital_death = true;
    else if (flag == "0" || flag == "false" || flag == "False" || flag.empty())
      m.in_hospital_death = false;
    else
      throw InputError("metadata row " + std::to_string(r + 1) + ": bad in_hospital_death '" + flag + "'");
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<MetaRow> read_meta_csv(const std::filesystem::path& path) { return parse_meta_csv(read_file(path)); }

std::string format_meta_csv(std::span<const MetaRow> rows) {
  std::string out = "patient_id,dob,admit_time,discharge_time,death_time,in_hospital_death\n";
  for (const auto& m : rows) {
    out += csv_field(m.patient_id) + ',' + format_date(m.dob) + ',' + format_timestamp(m.admit_time) + ',' +
           format_timestamp(m.discharge_time) + ',' + (m.death_time ? format_timestamp(*m.death_time) : "") + ',' +
           (m.in_hospital_death ? "1" : "0") + '\n';
  }
  return out;
}

std::string format_vocab(const Vocab& vocab) {
  std::string out;
  for (std::size_t i = 0; i < vocab.size(); ++i) out += std::to_string(i) + '\t' + vocab.words()[i] + '\n';
  return out;
}

Vocab parse_vocab(std::string_view content) {
  std::vector<std::string> words;
  for (auto line : lines_of(content)) {
    auto f = split_on(line, '\t');
    if (f.size() != 2) throw InputError("bad vocabulary line '" + std::string(line) + "'");
    if (parse_int(f[0], "vocabulary id") != static_cast<int>(words.size()))
      throw InputError("vocabulary ids must be dense and ascending");
    words.emplace_back(f[1]);
  }
  return Vocab(std::move(words));
}

std::string format_corpus(std::span<const PatientRecord> patients, bool counts) {
  std::string out;
  for (const auto& p : patients) {
    const std::string labels = std::string(p.labels.in_hospital ? "1" : "0") + ',' + (p.labels.post_30d ? "1" : "0") +
                               ',' + (p.labels.post_1y ? "1" : "0");
    const auto& seq = counts ? p.bow.counts : p.bow.vectors;
    for (std::size_t t = 0; t < seq.size(); ++t) {
      out += p.patient_id + '\t' + std::to_string(t + 1) + '\t' + labels + '\t';
      bool first = true;
      for (const auto& e : seq[t].entries) {
        if (!first) out += ' ';
        first = false;
        out += std::to_string(e.index) + ':' + format_real(e.value);
      }
      out += '\n';
    }
  }
  return out;
}

namespace {

struct CorpusLine {
  std::string patient_id;
  std::size_t t = 0;
  Labels labels;
  SparseVec vec;
};

CorpusLine parse_corpus_line(std::string_view line) {
  auto f = split_on(line, '\t');
  if (f.size() != 4) throw InputError("corpus line needs 4 tab-separated fields: '" + std::string(line) + "'");
  CorpusLine out;
  out.patient_id = std::string(f[0]);
  const int t = parse_int(f[1], "time point");
  if (t < 1) throw InputError("time points start at 1");
  out.t = static_cast<std::size_t>(t);
  auto lab = split_on(f[2], ',');
  if (lab.size() != 3) throw InputError("corpus labels need 3 comma-separated flags");
  auto flag = [](std::string_view v) {
    if (v == "1") return true;
    if (v == "0") return false;
    throw InputError("bad label flag '" + std::string(v) + "'");
  };
  out.labels = {flag(lab[0]), flag(lab[1]), flag(lab[2])};
  if (!f[3].empty()) {
    std::int64_t prev = -1;
    for (auto item : split_on(f[3], ' ')) {
      const auto colon = item.find(':');
      if (colon == std::string_view::npos) throw InputError("bad corpus entry '" + std::string(item) + "'");
      const int id = parse_int(item.substr(0, colon), "word id");
      if (id <= prev) throw InputError("corpus word ids must be strictly ascending");
      prev = id;
      out.vec.entries.push_back({static_cast<std::uint32_t>(id), parse_real(item.substr(colon + 1))});
    }
  }
  return out;
}

}  // namespace

std::vector<PatientRecord> parse_corpus(std::string_view weights, std::optional<std::string_view> counts) {
  std::vector<PatientRecord> out;
  auto add_lines = [&](std::string_view content, bool is_counts) {
    std::size_t cursor = 0;
    for (auto line : lines_of(content)) {
      CorpusLine cl = parse_corpus_line(line);
      if (!is_counts) {
        if (out.empty() || out.back().patient_id != cl.patient_id) {
          PatientRecord rec;
          rec.patient_id = cl.patient_id;
          rec.labels = cl.labels;
          rec.bow.patient_id = cl.patient_id;
          out.push_back(std::move(rec));
        }
        PatientRecord& rec = out.back();
        if (cl.t != rec.bow.vectors.size() + 1)
          throw InputError("patient " + cl.patient_id + ": time points must be contiguous from 1");
        if (!(cl.labels == rec.labels)) throw InputError("patient " + cl.patient_id + ": inconsistent labels");
        rec.bow.vectors.push_back(std::move(cl.vec));
      } else {
        while (cursor < out.size() && out[cursor].patient_id != cl.patient_id) ++cursor;
        if (cursor == out.size()) throw InputError("counts file does not match corpus file");
        PatientRecord& rec = out[cursor];
        if (cl.t != rec.bow.counts.size() + 1) throw InputError("counts file does not match corpus file");
        rec.bow.counts.push_back(std::move(cl.vec));
      }
    }
  };
  add_lines(weights, false);
  if (counts) {
    add_lines(*counts, true);
    for (const auto& rec : out)
      if (rec.bow.counts.size() != rec.bow.vectors.size())
        throw InputError("counts file does not match corpus file for " + rec.patient_id);
  }
  std::set<std::string> seen;
  for (const auto& rec : out)
    if (!seen.insert(rec.patient_id).second)
      throw InputError("patient " + rec.patient_id + " appears in non-contiguous corpus lines");
  return out;
}

std::string format_splits(const DatasetSplit& split) {
  std::map<std::string, std::string> rows;
  for (const auto& id : split.train) rows[id] = "train";
  for (const auto& id : split.validation) rows[id] = "validation";
  for (const auto& id : split.test) rows[id] = "test";
  std::string out;
  for (const auto& [id, name] : rows) out += id + '\t' + name + '\n';
  return out;
}

DatasetSplit parse_splits(std::string_view content) {
  DatasetSplit split;
  for (auto line : lines_of(content)) {
    auto f = split_on(line, '\t');
    if (f.size() != 2) throw InputError("bad splits line '" + std::string(line) + "'");
    if (f[1] == "train")
      split.train.emplace_back(f[0]);
    else if (f[1] == "validation")
      split.validation.emplace_back(f[0]);
    else if (f[1] == "test")
      split.test.emplace_back(f[0]);
    else
      throw InputError("unknown split name '" + std::string(f[1]) + "'");
  }
  return split;
}

std::string format_stats(const CorpusStats& s) {
  std::string out;
  out += "# patients\t" + std::to_string(s.patients) + '\n';
  out += "# unique words\t" + std::to_string(s.unique_words) + '\n';
  out += "Seq. len (median)\t" + format_real(s.seq_len_median) + '\n';
  out += "Seq. len (max)\t" + std::to_string(s.seq_len_max) + '\n';
  out += "Doc. len (median)\t" + format_real(s.doc_len_median) + '\n';
  out += "Doc. len (max)\t" + std::to_string(s.doc_len_max) + '\n';
  return out;
}

const PatientRecord* CorpusDir::find(const std::string& id) const {
  auto it = std::lower_bound(patients.begin(), patients.end(), id,
                             [](const PatientRecord& p, const std::string& key) { return p.patient_id < key; });
  if (it == patients.end() || it->patient_id != id) return nullptr;
  return &*it;
}

std::vector<const PatientRecord*> CorpusDir::select(const std::vector<std::string>& ids) const {
  std::vector<std::string> sorted = ids;
  std::sort(sorted.begin(), sorted.end());
  std::vector<const PatientRecord*> out;
  for (const auto& id : sorted) {
    const PatientRecord* p = find(id);
    if (!p) throw InputError("split lists unknown patient " + id);
    out.push_back(p);
  }
  return out;
}

void save_corpus_dir(const std::filesystem::path& dir, const PreprocessResult& result) {
  std::filesystem::create_directories(dir);
  write_file(dir / "corpus.tsv", format_corpus(result.patients, false));
  write_file(dir / "counts.tsv", format_corpus(result.patients, true));
  write_file(dir / "vocab.tsv", format_vocab(result.vocab));
  write_file(dir / "splits.tsv", format_splits(result.split));
  write_file(dir / "stats.txt", format_stats(result.stats));
}

CorpusDir load_corpus_dir(const std::filesystem::path& dir) {
  CorpusDir c;
  c.vocab = parse_vocab(read_file(dir / "vocab.tsv"));
  const std::string weights = read_file(dir / "corpus.tsv");
  std::optional<std::string> counts;
  if (std::filesystem::exists(dir / "counts.tsv")) counts = read_file(dir / "counts.tsv");
  c.patients = parse_corpus(weights, counts ? std::optional<std::string_view>(*counts) : std::nullopt);
  std::sort(c.patients.begin(), c.patients.end(),
            [](const PatientRecord& a, const PatientRecord& b) { return a.patient_id < b.patient_id; });
  for (const auto& p : c.patients)
    for (const auto& v : p.bow.vectors)
      for (const auto& e : v.entries)
        if (e.index >= c.vocab.size())
          throw CompatibilityError("corpus word id " + std::to_string(e.index) + " outside vocabulary of size " +
                                   std::to_string(c.vocab.size()));
  if (std::filesystem::exists(dir / "splits.tsv")) c.split = parse_splits(read_file(dir / "splits.tsv"));
  return c;
}

}  // namespace cliniseq::corpus
