#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cliniseq/corpus.hpp"
#include "cliniseq/tensor.hpp"

namespace cliniseq::eval {

// Mann-Whitney AUC with midranks for ties. nullopt when either class is absent.
std::optional<double> auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct AucPoint {
  std::size_t t = 0;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  std::optional<double> auc;
};

struct AucReport {
  std::vector<AucPoint> points;

  // Mean over time points with a defined AUC; nullopt if there are none.
  std::optional<double> mean_auc() const;
};

// scores[p][t-1] is patient p's score at time point t; a patient contributes
// to time point t only when scores[p].size() >= t.
AucReport eval_per_time_point(const std::vector<Vec>& scores, std::span<const std::uint8_t> labels,
                              std::size_t horizon);

// AUC of each patient's score at their own last time point.
std::optional<double> final_time_point_auc(const std::vector<Vec>& scores, std::span<const std::uint8_t> labels);

// Nearest-rank 90th percentile of sequence lengths (at least 1).
std::size_t default_horizon(std::span<const std::size_t> lengths);

// task,model,t,n_pos,n_neg,auc ; an absent AUC leaves the last field empty.
inline constexpr std::string_view kAucCsvHeader = "task,model,t,n_pos,n_neg,auc";
std::string format_auc_csv(const AucReport& report, std::string_view task, std::string_view model);

enum class WeightLayout {
  TopicMajor,  // K x V: topic k is row k (encoder weights, LDA phi)
  WordMajor,   // V x K: topic k is column k (decoder weights)
};

struct RankedWord {
  std::string word;
  double weight = 0.0;
};

// Highest-weight words of topic k; ties in ascending word order.
std::vector<RankedWord> top_words(const Tensor& weights, WeightLayout layout, std::size_t k, std::size_t n,
                                  const corpus::Vocab& vocab);

// "T<k>: w1, w2, ..." per topic, k from 1.
std::string format_topics(const Tensor& weights, WeightLayout layout, std::size_t n, const corpus::Vocab& vocab);

// Indices of the k nearest points to points[i] (Euclidean), self excluded,
// distance ties broken by ascending index.
std::vector<std::size_t> nearest_neighbors(const std::vector<Vec>& points, std::size_t i, std::size_t k);

// Mean |kNN_candidate(i) ∩ kNN_reference(i)| / k.
double knn_overlap_reference(const std::vector<Vec>& candidate, const std::vector<Vec>& reference, std::size_t k);

// Mean fraction of each point's kNN sharing its group (patient id).
double knn_overlap_groups(const std::vector<Vec>& latents, const std::vector<std::string>& groups, std::size_t k);

// One row of a latent export.
struct LatentRow {
  std::string patient_id;
  std::size_t t = 0;
  bool label = false;
  Vec z;
};

// patient_id<TAB>t<TAB>label<TAB>z_1<TAB>...<TAB>z_K
std::string format_latents(std::span<const LatentRow> rows);
std::vector<LatentRow> parse_latents(std::string_view content);

}  // namespace cliniseq::eval
