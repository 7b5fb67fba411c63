#include "cliniseq/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "cliniseq/error.hpp"

namespace cliniseq {

namespace {
std::size_t product(const std::vector<std::size_t>& dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}
}  // namespace

Tensor::Tensor(std::vector<std::size_t> dims, double fill)
    : dims_(std::move(dims)), values_(product(dims_), fill) {}

Tensor::Tensor(std::vector<std::size_t> dims, std::vector<double> values)
    : dims_(std::move(dims)), values_(std::move(values)) {
  require_dims(product(dims_) == values_.size(),
               "tensor " + shape_string() + " given " + std::to_string(values_.size()) + " values");
}

void Tensor::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

bool Tensor::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double x) { return std::isfinite(x); });
}

std::string Tensor::shape_string() const {
  std::string s = "[";
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(dims_[i]);
  }
  return s + "]";
}

double SparseVec::sum() const {
  double s = 0.0;
  for (const auto& e : entries) s += e.value;
  return s;
}

Vec SparseVec::to_dense(std::size_t n) const {
  Vec out(n, 0.0);
  for (const auto& e : entries) {
    require_dims(e.index < n, "sparse index " + std::to_string(e.index) + " >= " + std::to_string(n));
    out[e.index] = e.value;
  }
  return out;
}

SparseVec SparseVec::from_dense(std::span<const double> dense) {
  SparseVec out;
  for (std::size_t i = 0; i < dense.size(); ++i)
    if (dense[i] != 0.0) out.entries.push_back({static_cast<std::uint32_t>(i), dense[i]});
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  require_dims(a.size() == b.size(), "dot of lengths " + std::to_string(a.size()) + " and " +
                                         std::to_string(b.size()));
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace cliniseq
