#include "cliniseq/lda.hpp"

#include <algorithm>
#include <cmath>

#include "cliniseq/error.hpp"

namespace cliniseq::lda {

void LdaModel::refresh_phi() {
  phi = Tensor::matrix(K, V);
  const double vb = static_cast<double>(V) * beta;
  for (std::size_t k = 0; k < K; ++k) {
    const double denom = static_cast<double>(topic_totals[k]) + vb;
    for (std::size_t w = 0; w < V; ++w) phi(k, w) = (static_cast<double>(count(k, w)) + beta) / denom;
  }
}

namespace {

void check_corpus(const std::vector<Document>& docs, std::size_t V, std::size_t K) {
  if (docs.empty()) throw InputError("LDA: empty corpus");
  if (K == 0 || V == 0) throw InputError("LDA: K and V must be positive");
  for (const auto& d : docs)
    for (auto w : d)
      if (w >= V) throw InputError("LDA: token id " + std::to_string(w) + " >= V=" + std::to_string(V));
}

// Draws index k with probability weights[k] / total.
std::size_t draw(std::span<const double> weights, double total, Rng& rng) {
  const double u = rng.uniform() * total;
  double acc = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    acc += weights[k];
    if (u < acc) return k;
  }
  return weights.size() - 1;
}

}  // namespace

GibbsState::GibbsState(std::vector<Document> docs, std::size_t V, std::size_t K, double alpha, double beta, Rng& rng)
    : docs_(std::move(docs)), V_(V), K_(K), alpha_(alpha), beta_(beta) {
  check_corpus(docs_, V_, K_);
  z_.resize(docs_.size());
  for (std::size_t d = 0; d < docs_.size(); ++d) {
    z_[d].resize(docs_[d].size());
    for (auto& z : z_[d]) z = static_cast<std::uint32_t>(rng.uniform_int(K_));
  }
  rebuild_counts();
}

GibbsState::GibbsState(std::vector<Document> docs, std::vector<std::vector<std::uint32_t>> assignments, std::size_t V,
                       std::size_t K, double alpha, double beta)
    : docs_(std::move(docs)), z_(std::move(assignments)), V_(V), K_(K), alpha_(alpha), beta_(beta) {
  check_corpus(docs_, V_, K_);
  require_dims(z_.size() == docs_.size(), "one assignment list per document");
  for (std::size_t d = 0; d < docs_.size(); ++d) {
    require_dims(z_[d].size() == docs_[d].size(), "one assignment per token");
    for (auto z : z_[d])
      if (z >= K_) throw InputError("LDA: assignment out of range");
  }
  rebuild_counts();
}

void GibbsState::rebuild_counts() {
  ndk_.assign(docs_.size() * K_, 0);
  nkw_.assign(K_ * V_, 0);
  nk_.assign(K_, 0);
  for (std::size_t d = 0; d < docs_.size(); ++d)
    for (std::size_t i = 0; i < docs_[d].size(); ++i) {
      const auto k = z_[d][i], w = docs_[d][i];
      ++ndk_[d * K_ + k];
      ++nkw_[k * V_ + w];
      ++nk_[k];
    }
}

Vec GibbsState::conditional(std::size_t d, std::size_t pos) const {
  const auto w = docs_[d][pos];
  const auto own = z_[d][pos];
  const double vb = static_cast<double>(V_) * beta_;
  Vec p(K_);
  double total = 0.0;
  for (std::size_t k = 0; k < K_; ++k) {
    const double self = (k == own) ? 1.0 : 0.0;
    const double ndk = static_cast<double>(ndk_[d * K_ + k]) - self;
    const double nkw = static_cast<double>(nkw_[k * V_ + w]) - self;
    const double nk = static_cast<double>(nk_[k]) - self;
    p[k] = (ndk + alpha_) * (nkw + beta_) / (nk + vb);
    total += p[k];
  }
  for (double& x : p) x /= total;
  return p;
}

void GibbsState::sweep(Rng& rng) {
  const double vb = static_cast<double>(V_) * beta_;
  Vec p(K_);
  for (std::size_t d = 0; d < docs_.size(); ++d) {
    std::int64_t* ndk = ndk_.data() + d * K_;
    for (std::size_t i = 0; i < docs_[d].size(); ++i) {
      const auto w = docs_[d][i];
      const auto old = z_[d][i];
      --ndk[old];
      --nkw_[old * V_ + w];
      --nk_[old];
      double total = 0.0;
      for (std::size_t k = 0; k < K_; ++k) {
        p[k] = (static_cast<double>(ndk[k]) + alpha_) * (static_cast<double>(nkw_[k * V_ + w]) + beta_) /
               (static_cast<double>(nk_[k]) + vb);
        total += p[k];
      }
      const auto k = static_cast<std::uint32_t>(draw(p, total, rng));
      z_[d][i] = k;
      ++ndk[k];
      ++nkw_[k * V_ + w];
      ++nk_[k];
    }
  }
}

bool GibbsState::counts_consistent() const {
  for (std::size_t d = 0; d < docs_.size(); ++d) {
    std::int64_t s = 0;
    for (std::size_t k = 0; k < K_; ++k) {
      if (ndk_[d * K_ + k] < 0) return false;
      s += ndk_[d * K_ + k];
    }
    if (s != static_cast<std::int64_t>(docs_[d].size())) return false;
  }
  for (std::size_t k = 0; k < K_; ++k) {
    std::int64_t s = 0;
    for (std::size_t w = 0; w < V_; ++w) s += nkw_[k * V_ + w];
    if (s != nk_[k]) return false;
  }
  GibbsState fresh = *this;
  fresh.rebuild_counts();
  return fresh.ndk_ == ndk_ && fresh.nkw_ == nkw_ && fresh.nk_ == nk_;
}

double GibbsState::log_likelihood_per_token() const {
  const double vb = static_cast<double>(V_) * beta_;
  const double ka = static_cast<double>(K_) * alpha_;
  double ll = 0.0;
  std::size_t n = 0;
  for (std::size_t d = 0; d < docs_.size(); ++d) {
    const double nd = static_cast<double>(docs_[d].size());
    for (auto w : docs_[d]) {
      double p = 0.0;
      for (std::size_t k = 0; k < K_; ++k)
        p += (static_cast<double>(ndk_[d * K_ + k]) + alpha_) / (nd + ka) *
             (static_cast<double>(nkw_[k * V_ + w]) + beta_) / (static_cast<double>(nk_[k]) + vb);
      ll += std::log(p);
      ++n;
    }
  }
  return n ? ll / static_cast<double>(n) : 0.0;
}

LdaModel GibbsState::model() const {
  LdaModel m;
  m.K = K_;
  m.V = V_;
  m.alpha = alpha_;
  m.beta = beta_;
  m.topic_word_counts = nkw_;
  m.topic_totals = nk_;
  m.refresh_phi();
  return m;
}

LdaModel fit_gibbs(const std::vector<Document>& docs, std::size_t V, std::size_t K, double alpha, double beta,
                   std::size_t iterations, std::uint64_t seed, const SweepCallback& on_sweep) {
  if (iterations == 0) throw InputError("LDA: iterations must be >= 1");
  if (!(alpha > 0.0) || !(beta > 0.0)) throw InputError("LDA: alpha and beta must be positive");
  Rng rng(seed);
  GibbsState state(docs, V, K, alpha, beta, rng);
  for (std::size_t it = 1; it <= iterations; ++it) {
    state.sweep(rng);
    if (on_sweep) on_sweep(it, state);
  }
  return state.model();
}

Vec infer_doc(const LdaModel& model, const Document& doc, std::size_t burn_in, std::size_t samples,
              std::uint64_t seed) {
  const std::size_t K = model.K;
  Vec theta(K, 1.0 / static_cast<double>(K));
  if (doc.empty()) return theta;
  for (auto w : doc)
    if (w >= model.V) throw CompatibilityError("fold-in token id " + std::to_string(w) + " >= V");

  Rng rng(seed);
  const double vb = static_cast<double>(model.V) * model.beta;
  // Word likelihood under the frozen topic-word counts.
  auto word_term = [&](std::size_t k, std::uint32_t w) {
    return (static_cast<double>(model.count(k, w)) + model.beta) / (static_cast<double>(model.topic_totals[k]) + vb);
  };
  std::vector<std::int64_t> ndk(K, 0);
  std::vector<std::uint32_t> z(doc.size());
  Vec p(K);
  // Sequential initialization from the partial conditional.
  for (std::size_t i = 0; i < doc.size(); ++i) {
    double total = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      p[k] = (static_cast<double>(ndk[k]) + model.alpha) * word_term(k, doc[i]);
      total += p[k];
    }
    z[i] = static_cast<std::uint32_t>(draw(p, total, rng));
    ++ndk[z[i]];
  }
  std::fill(theta.begin(), theta.end(), 0.0);
  const double nd = static_cast<double>(doc.size());
  const double ka = static_cast<double>(K) * model.alpha;
  const std::size_t kept = std::max<std::size_t>(samples, 1);
  for (std::size_t it = 0; it < burn_in + kept; ++it) {
    for (std::size_t i = 0; i < doc.size(); ++i) {
      --ndk[z[i]];
      double total = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        p[k] = (static_cast<double>(ndk[k]) + model.alpha) * word_term(k, doc[i]);
        total += p[k];
      }
      z[i] = static_cast<std::uint32_t>(draw(p, total, rng));
      ++ndk[z[i]];
    }
    if (it >= burn_in)
      for (std::size_t k = 0; k < K; ++k) theta[k] += (static_cast<double>(ndk[k]) + model.alpha) / (nd + ka);
  }
  for (double& x : theta) x /= static_cast<double>(kept);
  return theta;
}

Vec average_theta_upto(std::span<const Vec> thetas, std::size_t t) {
  if (t < 1 || t > thetas.size())
    throw InputError("average_theta_upto: t=" + std::to_string(t) + " outside 1.." +
                            std::to_string(thetas.size()));
  const std::size_t K = thetas[0].size();
  Vec mean(K, 0.0);
  std::size_t n = 0;
  for (std::size_t s = 0; s < t; ++s) {
    const Vec& th = thetas[s];
    if (std::all_of(th.begin(), th.end(), [](double x) { return x == 0.0; })) continue;
    require_dims(th.size() == K, "theta lengths differ");
    for (std::size_t k = 0; k < K; ++k) mean[k] += th[k];
    ++n;
  }
  if (n > 0)
    for (double& x : mean) x /= static_cast<double>(n);
  return mean;
}

Document expand_counts(const SparseVec& counts) {
  Document doc;
  for (const auto& e : counts.entries) {
    const auto c = std::llround(e.value);
    if (c < 0 || std::abs(static_cast<double>(c) - e.value) > 1e-9)
      throw InputError("topic inference needs integer word counts");
    doc.insert(doc.end(), static_cast<std::size_t>(c), e.index);
  }
  return doc;
}

std::vector<Vec> topic_vectors_for_sequence(const LdaModel& model, std::span<const SparseVec> counts,
                                            const FoldInOptions& options, std::uint64_t seed) {
  std::vector<Vec> out;
  out.reserve(counts.size());
  for (std::size_t t = 0; t < counts.size(); ++t) {
    for (const auto& e : counts[t].entries)
      if (e.index >= model.V)
        throw CompatibilityError("word id " + std::to_string(e.index) + " outside LDA vocabulary of size " +
                                 std::to_string(model.V));
    if (counts[t].empty()) {
      out.emplace_back(model.K, 0.0);
      continue;
    }
    out.push_back(infer_doc(model, expand_counts(counts[t]), options.burn_in, options.samples, mix_seed(seed, t)));
  }
  return out;
}

}  // namespace cliniseq::lda
