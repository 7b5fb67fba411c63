#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "cliniseq/models.hpp"
#include "cliniseq/rng.hpp"

namespace helpers {

using namespace cliniseq;
using namespace cliniseq::models;

// Random non-negative bag of words over V; about a third of entries used.
inline SparseVec random_bow(std::size_t V, Rng& rng) {
  Vec d(V, 0.0);
  double s = 0;
  for (auto& v : d)
    if (rng.bernoulli(0.35)) s += (v = rng.uniform(0.1, 1.0));
  if (s == 0) s = d[0] = 1.0;
  for (auto& v : d) v /= s;
  return SparseVec::from_dense(d);
}

inline std::vector<SparseVec> random_sequence(std::size_t T, std::size_t V, Rng& rng) {
  std::vector<SparseVec> seq;
  for (std::size_t t = 0; t < T; ++t) seq.push_back(random_bow(V, rng));
  return seq;
}

inline std::vector<Vec> dense(const std::vector<SparseVec>& seq, std::size_t n) {
  std::vector<Vec> out;
  for (const auto& s : seq) out.push_back(s.to_dense(n));
  return out;
}

// Scales every tensor so activations are not all near zero.
inline JointModelParams toy_params(ModelKind kind, const ModelDims& dims, std::uint64_t seed, double scale = 2.0) {
  JointModelParams p = init_params(kind, dims, seed);
  Rng rng(seed * 7 + 1);
  for (auto& [name, t] : p.named_tensors())
    for (auto& v : t->values()) v = scale * v + 0.05 * rng.uniform(-1, 1);
  return p;
}

struct Batch {
  std::vector<std::vector<SparseVec>> inputs;
  std::vector<bool> labels;
};

// Mean loss over a batch, and its gradient.
inline std::pair<double, Vec> batch_value(const JointModelParams& base, const Vec& flat, const Batch& b,
                                   const TrainConfig& cfg) {
  JointModelParams p = base;
  p.unflatten(flat);
  double total = 0;
  Vec grad(flat.size(), 0.0);
  for (std::size_t i = 0; i < b.inputs.size(); ++i) {
    auto [l, g] = loss_and_gradient(p, b.inputs[i], b.labels[i], cfg);
    total += l;
    Vec gf = g.flatten();
    for (std::size_t j = 0; j < gf.size(); ++j) grad[j] += gf[j];
  }
  const double n = static_cast<double>(b.inputs.size());
  for (auto& v : grad) v /= n;
  return {total / n, grad};
}

// Max relative error per named tensor between analytic and central differences.
inline std::map<std::string, double> per_tensor_errors(const JointModelParams& p, const Batch& b, const TrainConfig& cfg,
                                                double h) {
  const Vec x = p.flatten();
  const Vec analytic = batch_value(p, x, b, cfg).second;
  std::map<std::string, double> out;
  std::size_t offset = 0;
  for (const auto& [name, t] : p.named_tensors()) {
    double worst = 0;
    for (std::size_t j = 0; j < t->size(); ++j) {
      Vec xp = x, xm = x;
      xp[offset + j] += h;
      xm[offset + j] -= h;
      const double num = (batch_value(p, xp, b, cfg).first - batch_value(p, xm, b, cfg).first) / (2 * h);
      const double a = analytic[offset + j];
      worst = std::max(worst, std::fabs(a - num) / std::max({std::fabs(a), std::fabs(num), 1e-6}));
    }
    out[name] = worst;
    offset += t->size();
  }
  return out;
}

inline TrainConfig zero_lambdas() {
  TrainConfig c;
  c.lambda1 = c.lambda2 = c.lambda3 = 0.0;
  return c;
}

inline TrainData toy_data(std::size_t n, std::size_t V, std::uint64_t seed) {
  Rng rng(seed);
  TrainData d;
  for (std::size_t i = 0; i < n; ++i) {
    Example e;
    e.patient_id = "p" + std::to_string(i);
    e.label = i % 2 == 0;
    const std::size_t T = 2 + rng.uniform_int(3);
    for (std::size_t t = 0; t < T; ++t) {
      Vec v(V, 0.0);
      // Positives lean on the first half of the vocabulary.
      for (int k = 0; k < 5; ++k) v[(e.label ? 0 : V / 2) + rng.uniform_int(V / 2)] += 1;
      for (auto& x : v) x /= 5;
      e.inputs.push_back(SparseVec::from_dense(v));
    }
    (i % 5 == 4 ? d.validation : d.train).push_back(e);
  }
  return d;
}

}  // namespace helpers
