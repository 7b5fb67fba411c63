#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "cliniseq/tensor.hpp"

namespace cliniseq {

struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::uint64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  // Zero moments shaped like params.
  static AdamState for_params(std::span<Tensor* const> params);
};

// One bias-corrected Adam step over a parameter list. Throws DimensionError
// when params, grads and state disagree in count or shape.
void adam_update(std::span<Tensor* const> params, std::span<const Tensor* const> grads, AdamState& state,
                 double lr);

using ValueAndGradient = std::function<std::pair<double, Vec>(const Vec&)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

// Central differences on every coordinate of point, compared against the
// analytic gradient f returns at point. Relative error uses an absolute floor
// of 1e-6 in the denominator.
GradCheckResult grad_check(const ValueAndGradient& f, const Vec& point, double h);

// Same, for a scalar function and a gradient supplied separately.
GradCheckResult grad_check(const std::function<double(const Vec&)>& f, const Vec& point,
                           const Vec& analytic, double h);

}  // namespace cliniseq
