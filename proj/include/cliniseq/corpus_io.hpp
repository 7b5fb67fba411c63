#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cliniseq/corpus.hpp"

namespace cliniseq::corpus {

// ISO-8601 "YYYY-MM-DD", "YYYY-MM-DD HH:MM[:SS]" or with 'T' separator and
// optional trailing 'Z'. Throws InputError otherwise.
Timestamp parse_timestamp(std::string_view text);
// "YYYY-MM-DD HH:MM:SS"
std::string format_timestamp(Timestamp t);
// "YYYY-MM-DD"
std::string format_date(Timestamp t);

// RFC-4180 records. Accepts CRLF or LF line ends and quoted fields spanning
// lines. Throws InputError on an unterminated quote.
std::vector<std::vector<std::string>> parse_csv(std::string_view content);
std::string csv_field(std::string_view value);

// Shortest decimal that round-trips the double.
std::string format_real(double x);
double parse_real(std::string_view text);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

// Header: patient_id,chart_time,category,text
std::vector<RawNote> read_notes_csv(const std::filesystem::path& path);
std::vector<RawNote> parse_notes_csv(std::string_view content);
std::string format_notes_csv(std::span<const RawNote> notes);

// Metadata row as stored on disk; age is derived from dob at admission.
struct MetaRow {
  std::string patient_id;
  Timestamp dob = 0;
  Timestamp admit_time = 0;
  Timestamp discharge_time = 0;
  std::optional<Timestamp> death_time;
  bool in_hospital_death = false;

  PatientMeta to_meta() const;
  friend bool operator==(const MetaRow&, const MetaRow&) = default;
};

double age_in_years(Timestamp dob, Timestamp at);

// Header: patient_id,dob,admit_time,discharge_time,death_time,in_hospital_death
std::vector<MetaRow> read_meta_csv(const std::filesystem::path& path);
std::vector<MetaRow> parse_meta_csv(std::string_view content);
std::string format_meta_csv(std::span<const MetaRow> rows);

// "id<TAB>word" per line, ascending id.
std::string format_vocab(const Vocab& vocab);
Vocab parse_vocab(std::string_view content);

// patient_id<TAB>t<TAB>hosp,30d,1y<TAB>id:value ... ; one line per time point.
// counts=true writes the integer counts instead of the normalized weights.
std::string format_corpus(std::span<const PatientRecord> patients, bool counts = false);
// Parses a weights file and, when given, the matching counts file.
std::vector<PatientRecord> parse_corpus(std::string_view weights, std::optional<std::string_view> counts = {});

// patient_id<TAB>train|validation|test
std::string format_splits(const DatasetSplit& split);
DatasetSplit parse_splits(std::string_view content);

std::string format_stats(const CorpusStats& stats);

// A preprocessed corpus directory: corpus.tsv, counts.tsv, vocab.tsv,
// splits.tsv and stats.txt.
struct CorpusDir {
  Vocab vocab;
  std::vector<PatientRecord> patients;
  DatasetSplit split;

  const PatientRecord* find(const std::string& id) const;
  std::vector<const PatientRecord*> select(const std::vector<std::string>& ids) const;
};

void save_corpus_dir(const std::filesystem::path& dir, const PreprocessResult& result);
CorpusDir load_corpus_dir(const std::filesystem::path& dir);

}  // namespace cliniseq::corpus
