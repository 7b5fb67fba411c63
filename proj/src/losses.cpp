#include "cliniseq/losses.hpp"

#include <algorithm>
#include <cmath>

#include "cliniseq/error.hpp"

namespace cliniseq {

double weighted_ce(double p, double q, double cfn) {
  const double pc = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
  return -cfn * q * std::log(pc) - (1.0 - q) * std::log(1.0 - pc);
}

double weighted_ce_grad(double p, double q, double cfn) {
  if (p < kProbClamp || p > 1.0 - kProbClamp) return 0.0;
  return -cfn * q / p + (1.0 - q) / (1.0 - p);
}

double categorical_ce(std::span<const double> pred, std::span<const double> target) {
  require_dims(pred.size() == target.size(), "categorical_ce lengths " + std::to_string(pred.size()) +
                                                 " and " + std::to_string(target.size()));
  double h = 0.0;
  for (std::size_t w = 0; w < pred.size(); ++w)
    if (target[w] != 0.0) h -= target[w] * std::log(std::max(pred[w], kReconstructionFloor));
  return h;
}

double categorical_ce(std::span<const double> pred, const SparseVec& target) {
  double h = 0.0;
  for (const auto& e : target.entries) {
    require_dims(e.index < pred.size(), "categorical_ce target index out of range");
    h -= e.value * std::log(std::max(pred[e.index], kReconstructionFloor));
  }
  return h;
}

Vec categorical_ce_grad(std::span<const double> pred, const SparseVec& target) {
  Vec g(pred.size(), 0.0);
  for (const auto& e : target.entries) {
    require_dims(e.index < pred.size(), "categorical_ce target index out of range");
    const double p = pred[e.index];
    g[e.index] = p > kReconstructionFloor ? -e.value / p : 0.0;
  }
  return g;
}

std::pair<double, Tensor> l1_value_and_subgradient(const Tensor& x) {
  Tensor sub(x.dims());
  double value = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    value += std::abs(x[i]);
    sub[i] = x[i] > 0.0 ? 1.0 : (x[i] < 0.0 ? -1.0 : 0.0);
  }
  return {value, std::move(sub)};
}

double l1_norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += std::abs(v);
  return s;
}

}  // namespace cliniseq
