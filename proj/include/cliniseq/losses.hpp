#pragma once

#include <span>
#include <utility>

#include "cliniseq/tensor.hpp"

namespace cliniseq {

inline constexpr double kProbClamp = 1e-7;
inline constexpr double kReconstructionFloor = 1e-12;

// Binary cross-entropy with the positive (false-negative) term scaled by cfn:
//   H = -cfn * q * ln p - (1 - q) * ln(1 - p),  p clamped to [1e-7, 1 - 1e-7].
double weighted_ce(double p, double q, double cfn);

// dH/dp. Zero where the clamp is active.
double weighted_ce_grad(double p, double q, double cfn);

// -sum_w target_w * ln max(pred_w, 1e-12). A zero target gives 0.
double categorical_ce(std::span<const double> pred, std::span<const double> target);
double categorical_ce(std::span<const double> pred, const SparseVec& target);

// dCE/dpred for a sparse target (only target entries are non-zero).
Vec categorical_ce_grad(std::span<const double> pred, const SparseVec& target);

// Sum |x_i| and its subgradient sign(x_i), sign(0) = 0.
std::pair<double, Tensor> l1_value_and_subgradient(const Tensor& x);
double l1_norm(std::span<const double> x);

}  // namespace cliniseq
