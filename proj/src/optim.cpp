#include "cliniseq/optim.hpp"

#include <algorithm>
#include <cmath>

#include "cliniseq/error.hpp"

namespace cliniseq {

AdamState AdamState::for_params(std::span<Tensor* const> params) {
  AdamState s;
  s.m.reserve(params.size());
  s.v.reserve(params.size());
  for (const Tensor* p : params) {
    s.m.emplace_back(p->dims());
    s.v.emplace_back(p->dims());
  }
  return s;
}

void adam_update(std::span<Tensor* const> params, std::span<const Tensor* const> grads, AdamState& state,
                 double lr) {
  require_dims(params.size() == grads.size() && params.size() == state.m.size() &&
                   params.size() == state.v.size(),
               "adam: parameter/gradient/state counts differ");
  for (std::size_t k = 0; k < params.size(); ++k)
    require_dims(params[k]->same_shape(*grads[k]) && params[k]->same_shape(state.m[k]),
                 "adam: shape mismatch at tensor " + std::to_string(k));

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto p = params[k]->values();
    auto g = grads[k]->values();
    auto m = state.m[k].values();
    auto v = state.v[k].values();
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      // With beta = 0 the correction factor is 1.
      const double mhat = c1 > 0.0 ? m[i] / c1 : m[i];
      const double vhat = c2 > 0.0 ? v[i] / c2 : v[i];
      p[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

GradCheckResult grad_check(const std::function<double(const Vec&)>& f, const Vec& point,
                           const Vec& analytic, double h) {
  require_dims(point.size() == analytic.size(), "grad_check: gradient length");
  GradCheckResult result;
  Vec x = point;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + h;
    const double fp = f(x);
    x[i] = orig - h;
    const double fm = f(x);
    x[i] = orig;
    const double numeric = (fp - fm) / (2.0 * h);
    const double a = analytic[i];
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
    const double rel = std::abs(a - numeric) / denom;
    if (i == 0 || rel > result.max_rel_error) {
      result.max_rel_error = rel;
      result.worst_index = i;
      result.analytic = a;
      result.numeric = numeric;
    }
  }
  return result;
}

GradCheckResult grad_check(const ValueAndGradient& f, const Vec& point, double h) {
  const Vec analytic = f(point).second;
  return grad_check([&](const Vec& x) { return f(x).first; }, point, analytic, h);
}

}  // namespace cliniseq
