#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cliniseq/rng.hpp"
#include "cliniseq/tensor.hpp"
#include "cliniseq/text.hpp"

namespace cliniseq::corpus {

using Timestamp = std::int64_t;  // UTC seconds

inline constexpr Timestamp kTimePointSeconds = 12 * 3600;
inline constexpr Timestamp kDaySeconds = 24 * 3600;

struct RawNote {
  std::string patient_id;
  Timestamp chart_time = 0;
  std::string category;
  std::string text;

  friend bool operator==(const RawNote&, const RawNote&) = default;
};

struct PatientMeta {
  std::string patient_id;
  double age_at_admission = 0.0;
  Timestamp admit_time = 0;
  Timestamp discharge_time = 0;
  std::optional<Timestamp> death_time;
  bool in_hospital_death = false;

  // Throws InputError when the record is inconsistent.
  void validate() const;
};

enum class Task { Hospital, Day30, Year1 };

Task parse_task(std::string_view name);  // "hospital" | "30d" | "1y"
std::string_view task_name(Task task);

struct Labels {
  bool in_hospital = false;
  bool post_30d = false;
  bool post_1y = false;

  bool get(Task task) const;
  friend bool operator==(const Labels&, const Labels&) = default;
};

class Vocab {
 public:
  Vocab() = default;
  // Ids follow the order of words, which must be unique.
  explicit Vocab(std::vector<std::string> words);

  std::size_t size() const { return id_to_word_.size(); }
  std::optional<std::uint32_t> id(const std::string& word) const;
  const std::string& word(std::uint32_t id) const { return id_to_word_.at(id); }
  const std::vector<std::string>& words() const { return id_to_word_; }
  const std::map<std::string, std::uint32_t>& word_to_id() const { return word_to_id_; }

  friend bool operator==(const Vocab& a, const Vocab& b) { return a.id_to_word_ == b.id_to_word_; }

 private:
  std::map<std::string, std::uint32_t> word_to_id_;
  std::vector<std::string> id_to_word_;
};

using TokenCounts = std::map<std::string, std::int64_t>;

// Un-normalized token counts per 12-hour time point.
struct TokenSequence {
  std::string patient_id;
  std::vector<TokenCounts> time_points;

  std::int64_t total_tokens() const;
  TokenCounts merged() const;
};

// Bag-of-words timeline over a vocabulary. counts keeps the integer counts
// (needed for topic inference); vectors holds the L1-normalized weights.
struct BowSequence {
  std::string patient_id;
  std::vector<SparseVec> counts;
  std::vector<SparseVec> vectors;

  std::size_t length() const { return vectors.size(); }
};

struct DatasetSplit {
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> test;
};

// 1-based time point of chart_time; notes before admission fold into 1.
std::size_t time_point_of(Timestamp chart_time, Timestamp admit_time);
std::size_t sequence_length(const PatientMeta& meta);

// Buckets a patient's notes into time points and sums token counts. Notes
// after discharge are dropped. Throws InputError when no note remains.
TokenSequence segment_time_points(std::span<const RawNote> notes, const PatientMeta& meta,
                                  const StopWords& stop = StopWords::onix());

// Per patient, the top `cap` words by tf-idf (ties ascending), unioned; ids in
// lexicographic order.
Vocab build_vocab(std::span<const std::pair<std::string, TokenCounts>> train_patients, std::size_t cap = 500);

SparseVec bow_normalize(const SparseVec& counts);

BowSequence to_bow_sequence(const TokenSequence& tokens, const Vocab& vocab);

Labels compute_labels(const PatientMeta& meta);

struct PatientSummary {
  std::string patient_id;
  double age_at_admission = 0.0;
  std::int64_t total_tokens = 0;
  bool training_candidate = false;
};

inline constexpr double kMinAge = 18.0;
inline constexpr std::int64_t kMinTrainingTokens = 100;

std::vector<PatientSummary> filter_patients(std::vector<PatientSummary> patients);

// Shuffles ids (sorted first) under rng and cuts 60/20/20.
DatasetSplit split_patients(std::vector<std::string> ids, Rng& rng);

// Number of negatives to drop so negatives make up at most 70% of the set.
std::size_t negatives_to_remove(std::size_t total, std::size_t negatives);

// Removes uniformly chosen negatives from train until the 70% cap holds.
std::vector<std::string> downsample_negatives(const std::vector<std::string>& train,
                                              const std::function<bool(const std::string&)>& is_positive,
                                              Rng& rng);

DatasetSplit split_and_downsample(std::vector<std::string> ids,
                                  const std::function<bool(const std::string&)>& is_positive,
                                  std::uint64_t seed);

// One patient after preprocessing.
struct PatientRecord {
  std::string patient_id;
  Labels labels;
  BowSequence bow;
};

struct CorpusStats {
  std::size_t patients = 0;
  std::size_t unique_words = 0;
  double seq_len_median = 0.0;
  std::size_t seq_len_max = 0;
  double doc_len_median = 0.0;
  std::int64_t doc_len_max = 0;
};

CorpusStats compute_stats(std::span<const PatientRecord> patients, std::size_t vocab_size);

struct PreprocessOptions {
  std::uint64_t seed = 1;
  std::size_t vocab_cap = 500;
  const StopWords* stop_words = nullptr;  // defaults to the Onix list
};

struct PreprocessResult {
  Vocab vocab;
  std::vector<PatientRecord> patients;  // sorted by patient_id
  DatasetSplit split;                   // before any per-task downsampling
  CorpusStats stats;
};

bool is_discharge_summary(std::string_view category);

// Full pipeline: drop discharge summaries, tokenize, segment, label, filter,
// split, build the vocabulary from the training split, normalize.
PreprocessResult preprocess(std::span<const RawNote> notes, std::span<const PatientMeta> metas,
                            const PreprocessOptions& options = {});

}  // namespace cliniseq::corpus
