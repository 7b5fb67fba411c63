#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "cliniseq/rng.hpp"
#include "cliniseq/tensor.hpp"

namespace cliniseq::lda {

// Word ids, one entry per token.
using Document = std::vector<std::uint32_t>;

inline constexpr std::size_t kDefaultTopics = 50;
inline constexpr double kDefaultBeta = 0.01;
inline double default_alpha(std::size_t K) { return 50.0 / static_cast<double>(K); }

struct LdaModel {
  std::size_t K = 0;
  std::size_t V = 0;
  double alpha = 0.0;
  double beta = 0.0;
  std::vector<std::int64_t> topic_word_counts;  // K x V, row-major
  std::vector<std::int64_t> topic_totals;       // K
  Tensor phi;                                   // K x V, rows sum to 1

  std::int64_t count(std::size_t k, std::size_t w) const { return topic_word_counts[k * V + w]; }
  // Recomputes phi from the counts.
  void refresh_phi();
};

// Collapsed Gibbs sampler state over a fixed corpus.
class GibbsState {
 public:
  // Topics initialized uniformly at random.
  GibbsState(std::vector<Document> docs, std::size_t V, std::size_t K, double alpha, double beta, Rng& rng);
  // Explicit initial assignments, one per token.
  GibbsState(std::vector<Document> docs, std::vector<std::vector<std::uint32_t>> assignments, std::size_t V,
             std::size_t K, double alpha, double beta);

  // p(z = k | all other assignments) for token pos of doc, normalized. The
  // token's own assignment is excluded from the counts.
  Vec conditional(std::size_t doc, std::size_t pos) const;

  // One pass over all tokens in document/token order.
  void sweep(Rng& rng);

  bool counts_consistent() const;
  double log_likelihood_per_token() const;
  LdaModel model() const;

  std::size_t num_docs() const { return docs_.size(); }
  std::size_t num_topics() const { return K_; }
  const std::vector<Document>& docs() const { return docs_; }
  const std::vector<std::vector<std::uint32_t>>& assignments() const { return z_; }
  std::int64_t doc_topic_count(std::size_t d, std::size_t k) const { return ndk_[d * K_ + k]; }
  std::int64_t topic_word_count(std::size_t k, std::size_t w) const { return nkw_[k * V_ + w]; }
  std::int64_t topic_total(std::size_t k) const { return nk_[k]; }

 private:
  void rebuild_counts();

  std::vector<Document> docs_;
  std::vector<std::vector<std::uint32_t>> z_;
  std::size_t V_, K_;
  double alpha_, beta_;
  std::vector<std::int64_t> ndk_, nkw_, nk_;
};

using SweepCallback = std::function<void(std::size_t sweep, const GibbsState&)>;

// Throws InputError on an empty corpus, a token id >= V or iterations == 0.
LdaModel fit_gibbs(const std::vector<Document>& docs, std::size_t V, std::size_t K, double alpha, double beta,
                   std::size_t iterations, std::uint64_t seed, const SweepCallback& on_sweep = {});

// Fold-in inference with the topic-word counts held fixed. theta is averaged
// over the retained samples. An empty document gives the uniform vector.
Vec infer_doc(const LdaModel& model, const Document& doc, std::size_t burn_in, std::size_t samples,
              std::uint64_t seed);

// Mean of thetas[0..t) skipping all-zero (empty) vectors; zero when all are empty.
Vec average_theta_upto(std::span<const Vec> thetas, std::size_t t);

// Expands sparse integer counts into a token list ordered by word id.
Document expand_counts(const SparseVec& counts);

struct FoldInOptions {
  std::size_t burn_in = 20;
  std::size_t samples = 30;
};

// z^(t) per time point from integer counts; empty points give the zero vector.
std::vector<Vec> topic_vectors_for_sequence(const LdaModel& model, std::span<const SparseVec> counts,
                                            const FoldInOptions& options, std::uint64_t seed);

}  // namespace cliniseq::lda
