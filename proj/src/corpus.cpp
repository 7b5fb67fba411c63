#include "cliniseq/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "cliniseq/error.hpp"

namespace cliniseq::corpus {

void PatientMeta::validate() const {
  if (patient_id.empty()) throw InputError("patient metadata with empty patient_id");
  if (discharge_time < admit_time) throw InputError("patient " + patient_id + ": discharge before admission");
  if (in_hospital_death) {
    if (!death_time) throw InputError("patient " + patient_id + ": in-hospital death without death_time");
    if (*death_time > discharge_time)
      throw InputError("patient " + patient_id + ": in-hospital death after discharge");
  }
}

Task parse_task(std::string_view name) {
  if (name == "hospital") return Task::Hospital;
  if (name == "30d") return Task::Day30;
  if (name == "1y") return Task::Year1;
  throw InputError("unknown task '" + std::string(name) + "' (expected hospital, 30d or 1y)");
}

std::string_view task_name(Task task) {
  switch (task) {
    case Task::Hospital: return "hospital";
    case Task::Day30: return "30d";
    case Task::Year1: return "1y";
  }
  return "hospital";
}

bool Labels::get(Task task) const {
  switch (task) {
    case Task::Hospital: return in_hospital;
    case Task::Day30: return post_30d;
    case Task::Year1: return post_1y;
  }
  return false;
}

Vocab::Vocab(std::vector<std::string> words) : id_to_word_(std::move(words)) {
  for (std::size_t i = 0; i < id_to_word_.size(); ++i) {
    auto [it, inserted] = word_to_id_.emplace(id_to_word_[i], static_cast<std::uint32_t>(i));
    if (!inserted) throw InputError("duplicate vocabulary word '" + id_to_word_[i] + "'");
  }
}

std::optional<std::uint32_t> Vocab::id(const std::string& word) const {
  auto it = word_to_id_.find(word);
  if (it == word_to_id_.end()) return std::nullopt;
  return it->second;
}

std::int64_t TokenSequence::total_tokens() const {
  std::int64_t n = 0;
  for (const auto& tp : time_points)
    for (const auto& [w, c] : tp) n += c;
  return n;
}

TokenCounts TokenSequence::merged() const {
  TokenCounts all;
  for (const auto& tp : time_points)
    for (const auto& [w, c] : tp) all[w] += c;
  return all;
}

std::size_t time_point_of(Timestamp chart_time, Timestamp admit_time) {
  if (chart_time < admit_time) return 1;
  return static_cast<std::size_t>((chart_time - admit_time) / kTimePointSeconds) + 1;
}

std::size_t sequence_length(const PatientMeta& meta) {
  const Timestamp stay = meta.discharge_time - meta.admit_time;
  const Timestamp buckets = (stay + kTimePointSeconds - 1) / kTimePointSeconds;
  return static_cast<std::size_t>(std::max<Timestamp>(1, buckets));
}

TokenSequence segment_time_points(std::span<const RawNote> notes, const PatientMeta& meta,
                                  const StopWords& stop) {
  TokenSequence seq;
  seq.patient_id = meta.patient_id;
  const std::size_t T = sequence_length(meta);
  seq.time_points.assign(T, {});
  std::size_t kept = 0;
  for (const RawNote& note : notes) {
    if (note.patient_id != meta.patient_id)
      throw InputError("note for patient " + note.patient_id + " passed with metadata of " + meta.patient_id);
    if (note.chart_time > meta.discharge_time) continue;
    // A note stamped exactly at a discharge that ends on a bucket boundary
    // belongs to the last time point.
    const std::size_t t = std::min(time_point_of(note.chart_time, meta.admit_time), T);
    for (auto& tok : normalize_text(note.text, stop)) ++seq.time_points[t - 1][tok];
    ++kept;
  }
  if (kept == 0) throw InputError("patient " + meta.patient_id + " has no notes within the stay");
  return seq;
}

Vocab build_vocab(std::span<const std::pair<std::string, TokenCounts>> train_patients, std::size_t cap) {
  if (train_patients.empty()) throw InputError("build_vocab: no training patients");
  std::map<std::string, std::size_t> df;
  for (const auto& [id, counts] : train_patients)
    for (const auto& [w, c] : counts)
      if (c > 0) ++df[w];
  const double n = static_cast<double>(train_patients.size());

  std::set<std::string> kept;
  std::vector<std::pair<double, const std::string*>> scored;
  for (const auto& [id, counts] : train_patients) {
    scored.clear();
    for (const auto& [w, c] : counts) {
      if (c <= 0) continue;
      const double idf = std::log(n / static_cast<double>(df[w]));
      scored.emplace_back(static_cast<double>(c) * idf, &w);
    }
    const std::size_t take = std::min(cap, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take), scored.end(),
                      [](const auto& a, const auto& b) {
                        if (a.first != b.first) return a.first > b.first;
                        return *a.second < *b.second;
                      });
    for (std::size_t i = 0; i < take; ++i) kept.insert(*scored[i].second);
  }
  return Vocab(std::vector<std::string>(kept.begin(), kept.end()));
}

SparseVec bow_normalize(const SparseVec& counts) {
  const double total = counts.sum();
  if (total == 0.0) return {};
  SparseVec out;
  out.entries.reserve(counts.nnz());
  for (const auto& e : counts.entries) out.entries.push_back({e.index, e.value / total});
  return out;
}

BowSequence to_bow_sequence(const TokenSequence& tokens, const Vocab& vocab) {
  BowSequence bow;
  bow.patient_id = tokens.patient_id;
  bow.counts.reserve(tokens.time_points.size());
  for (const auto& tp : tokens.time_points) {
    std::map<std::uint32_t, double> ids;
    for (const auto& [w, c] : tp)
      if (auto id = vocab.id(w)) ids[*id] += static_cast<double>(c);
    SparseVec v;
    for (const auto& [id, c] : ids) v.entries.push_back({id, c});
    bow.counts.push_back(std::move(v));
  }
  for (const auto& c : bow.counts) bow.vectors.push_back(bow_normalize(c));
  return bow;
}

Labels compute_labels(const PatientMeta& meta) {
  Labels y;
  y.in_hospital = meta.in_hospital_death;
  if (meta.death_time) {
    y.post_30d = *meta.death_time <= meta.discharge_time + 30 * kDaySeconds;
    y.post_1y = *meta.death_time <= meta.discharge_time + 365 * kDaySeconds;
  }
  return y;
}

std::vector<PatientSummary> filter_patients(std::vector<PatientSummary> patients) {
  std::erase_if(patients, [](const PatientSummary& p) {
    if (p.age_at_admission < kMinAge) return true;
    return p.training_candidate && p.total_tokens < kMinTrainingTokens;
  });
  return patients;
}

DatasetSplit split_patients(std::vector<std::string> ids, Rng& rng) {
  if (ids.size() < 5) throw InputError("need at least 5 patients to split, got " + std::to_string(ids.size()));
  std::sort(ids.begin(), ids.end());
  rng.shuffle(ids);
  const std::size_t n = ids.size();
  const std::size_t n_train = n * 6 / 10;
  const std::size_t n_val = n * 2 / 10;
  DatasetSplit split;
  split.train.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.validation.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_train),
                          ids.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  split.test.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), ids.end());
  return split;
}

std::size_t negatives_to_remove(std::size_t total, std::size_t negatives) {
  // Smallest k with 10 (neg - k) <= 7 (total - k).
  const auto excess = static_cast<std::int64_t>(10 * negatives) - static_cast<std::int64_t>(7 * total);
  if (excess <= 0) return 0;
  return static_cast<std::size_t>((excess + 2) / 3);
}

std::vector<std::string> downsample_negatives(const std::vector<std::string>& train,
                                              const std::function<bool(const std::string&)>& is_positive,
                                              Rng& rng) {
  std::vector<std::string> negatives;
  for (const auto& id : train)
    if (!is_positive(id)) negatives.push_back(id);
  const std::size_t k = negatives_to_remove(train.size(), negatives.size());
  if (k == 0) return train;
  rng.shuffle(negatives);
  std::set<std::string> removed(negatives.begin(), negatives.begin() + static_cast<std::ptrdiff_t>(k));
  std::vector<std::string> kept;
  kept.reserve(train.size() - k);
  for (const auto& id : train)
    if (!removed.count(id)) kept.push_back(id);
  return kept;
}

DatasetSplit split_and_downsample(std::vector<std::string> ids,
                                  const std::function<bool(const std::string&)>& is_positive,
                                  std::uint64_t seed) {
  Rng rng(seed);
  DatasetSplit split = split_patients(std::move(ids), rng);
  split.train = downsample_negatives(split.train, is_positive, rng);
  return split;
}

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

CorpusStats compute_stats(std::span<const PatientRecord> patients, std::size_t vocab_size) {
  CorpusStats s;
  s.patients = patients.size();
  s.unique_words = vocab_size;
  std::vector<double> seq, doc;
  for (const auto& p : patients) {
    seq.push_back(static_cast<double>(p.bow.length()));
    s.seq_len_max = std::max(s.seq_len_max, p.bow.length());
    for (const auto& c : p.bow.counts) {
      if (c.empty()) continue;
      const auto len = static_cast<std::int64_t>(std::llround(c.sum()));
      doc.push_back(static_cast<double>(len));
      s.doc_len_max = std::max(s.doc_len_max, len);
    }
  }
  s.seq_len_median = median(std::move(seq));
  s.doc_len_median = median(std::move(doc));
  return s;
}

bool is_discharge_summary(std::string_view category) {
  std::string norm;
  for (char c : category) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u)) norm += static_cast<char>(std::tolower(u));
  }
  return norm == "dischargesummary";
}

PreprocessResult preprocess(std::span<const RawNote> notes, std::span<const PatientMeta> metas,
                            const PreprocessOptions& options) {
  const StopWords& stop = options.stop_words ? *options.stop_words : StopWords::onix();

  std::map<std::string, const PatientMeta*> meta_by_id;
  for (const auto& m : metas) {
    m.validate();
    if (!meta_by_id.emplace(m.patient_id, &m).second)
      throw InputError("duplicate metadata for patient " + m.patient_id);
  }
  std::map<std::string, std::vector<RawNote>> notes_by_id;
  for (const auto& n : notes) {
    if (is_discharge_summary(n.category)) continue;
    if (!meta_by_id.count(n.patient_id)) throw InputError("note for unknown patient " + n.patient_id);
    notes_by_id[n.patient_id].push_back(n);
  }

  // Age filter and segmentation for every patient with usable notes.
  std::map<std::string, TokenSequence> sequences;
  std::vector<PatientSummary> summaries;
  for (const auto& [id, meta] : meta_by_id) {
    auto it = notes_by_id.find(id);
    if (it == notes_by_id.end()) continue;
    TokenSequence seq;
    try {
      seq = segment_time_points(it->second, *meta, stop);
    } catch (const InputError&) {
      continue;
    }
    summaries.push_back({id, meta->age_at_admission, seq.total_tokens(), false});
    sequences.emplace(id, std::move(seq));
  }
  summaries = filter_patients(std::move(summaries));
  if (summaries.empty()) throw InputError("no patients");

  std::vector<std::string> ids;
  for (const auto& s : summaries) ids.push_back(s.patient_id);
  Rng rng(options.seed);
  DatasetSplit split = split_patients(ids, rng);

  // Token floor on training candidates only.
  std::set<std::string> train_set(split.train.begin(), split.train.end());
  for (auto& s : summaries) s.training_candidate = train_set.count(s.patient_id) > 0;
  std::set<std::string> kept;
  for (const auto& s : filter_patients(summaries)) kept.insert(s.patient_id);
  std::erase_if(split.train, [&](const std::string& id) { return !kept.count(id); });
  if (split.train.empty()) throw InputError("no training patients left after filtering");

  std::vector<std::pair<std::string, TokenCounts>> train_counts;
  for (const auto& id : split.train) train_counts.emplace_back(id, sequences.at(id).merged());
  std::sort(train_counts.begin(), train_counts.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  PreprocessResult result;
  result.vocab = build_vocab(train_counts, options.vocab_cap);
  for (const auto& id : kept) {
    PatientRecord rec;
    rec.patient_id = id;
    rec.labels = compute_labels(*meta_by_id.at(id));
    rec.bow = to_bow_sequence(sequences.at(id), result.vocab);
    result.patients.push_back(std::move(rec));
  }
  result.split = std::move(split);
  result.stats = compute_stats(result.patients, result.vocab.size());
  return result;
}

}  // namespace cliniseq::corpus
