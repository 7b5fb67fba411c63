#include "cliniseq/layers.hpp"

#include <algorithm>
#include <cmath>

#include "cliniseq/error.hpp"

namespace cliniseq {

AffineParams AffineParams::zeros(std::size_t out, std::size_t in, bool with_bias) {
  AffineParams p;
  p.W = Tensor::matrix(out, in);
  if (with_bias) p.b = Tensor::vector(out);
  return p;
}

Vec affine_forward(const AffineParams& p, std::span<const double> x) {
  require_dims(x.size() == p.in_dim(), "affine input " + std::to_string(x.size()) + " vs W " +
                                           p.W.shape_string());
  const std::size_t out = p.out_dim();
  Vec y(out);
  for (std::size_t r = 0; r < out; ++r) {
    const double* w = p.W.values().data() + r * p.in_dim();
    double s = 0.0;
    for (std::size_t c = 0; c < x.size(); ++c) s += w[c] * x[c];
    y[r] = s + (p.b ? (*p.b)[r] : 0.0);
  }
  return y;
}

Vec affine_forward(const AffineParams& p, const SparseVec& x) {
  const std::size_t out = p.out_dim(), in = p.in_dim();
  Vec y(out, 0.0);
  if (p.b)
    for (std::size_t r = 0; r < out; ++r) y[r] = (*p.b)[r];
  for (const auto& e : x.entries) {
    require_dims(e.index < in, "sparse affine index " + std::to_string(e.index) + " vs W " +
                                   p.W.shape_string());
    for (std::size_t r = 0; r < out; ++r) y[r] += p.W(r, e.index) * e.value;
  }
  return y;
}

void affine_backward(const AffineParams& p, std::span<const double> x, std::span<const double> dy,
                     AffineParams& grad, Vec* dx) {
  const std::size_t out = p.out_dim(), in = p.in_dim();
  require_dims(x.size() == in && dy.size() == out, "affine backward vs W " + p.W.shape_string());
  for (std::size_t r = 0; r < out; ++r) {
    if (dy[r] == 0.0) continue;
    double* g = grad.W.values().data() + r * in;
    for (std::size_t c = 0; c < in; ++c) g[c] += dy[r] * x[c];
  }
  if (grad.b)
    for (std::size_t r = 0; r < out; ++r) (*grad.b)[r] += dy[r];
  if (dx) {
    dx->assign(in, 0.0);
    for (std::size_t r = 0; r < out; ++r) {
      if (dy[r] == 0.0) continue;
      const double* w = p.W.values().data() + r * in;
      for (std::size_t c = 0; c < in; ++c) (*dx)[c] += w[c] * dy[r];
    }
  }
}

void affine_backward(const AffineParams& p, const SparseVec& x, std::span<const double> dy,
                     AffineParams& grad) {
  const std::size_t out = p.out_dim();
  require_dims(dy.size() == out, "affine backward vs W " + p.W.shape_string());
  for (const auto& e : x.entries)
    for (std::size_t r = 0; r < out; ++r) grad.W(r, e.index) += dy[r] * e.value;
  if (grad.b)
    for (std::size_t r = 0; r < out; ++r) (*grad.b)[r] += dy[r];
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Vec relu(std::span<const double> x) {
  Vec y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
  return y;
}

Vec sigmoid(std::span<const double> x) {
  Vec y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = sigmoid(x[i]);
  return y;
}

Vec tanh(std::span<const double> x) {
  Vec y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::tanh(x[i]);
  return y;
}

Vec softmax(std::span<const double> x) {
  Vec y(x.size());
  if (x.empty()) return y;
  const double m = *std::max_element(x.begin(), x.end());
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] = std::exp(x[i] - m);
    total += y[i];
  }
  for (double& v : y) v /= total;
  return y;
}

Vec relu_backward(std::span<const double> pre, std::span<const double> dout) {
  require_dims(pre.size() == dout.size(), "relu backward");
  Vec d(pre.size());
  for (std::size_t i = 0; i < pre.size(); ++i) d[i] = pre[i] > 0.0 ? dout[i] : 0.0;
  return d;
}

Vec softmax_backward(std::span<const double> y, std::span<const double> dy) {
  require_dims(y.size() == dy.size(), "softmax backward");
  double inner = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) inner += y[i] * dy[i];
  Vec d(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) d[i] = y[i] * (dy[i] - inner);
  return d;
}

LstmParams LstmParams::zeros(std::size_t hidden, std::size_t input) {
  LstmParams p;
  for (std::size_t g = 0; g < 4; ++g) {
    p.U[g] = Tensor::matrix(hidden, input);
    p.R[g] = Tensor::matrix(hidden, hidden);
    p.bias[g] = Tensor::vector(hidden);
  }
  return p;
}

namespace {

// pre[r] = U x + R h + b for one gate.
void gate_preactivation(const Tensor& U, const Tensor& R, const Tensor& b, std::span<const double> x,
                        std::span<const double> h, Vec& pre) {
  const std::size_t H = R.rows(), K = U.cols();
  pre.assign(H, 0.0);
  for (std::size_t r = 0; r < H; ++r) {
    const double* u = U.values().data() + r * K;
    const double* rw = R.values().data() + r * H;
    double s = b[r];
    for (std::size_t c = 0; c < K; ++c) s += u[c] * x[c];
    for (std::size_t c = 0; c < H; ++c) s += rw[c] * h[c];
    pre[r] = s;
  }
}

}  // namespace

LstmStepCache lstm_step(const LstmParams& p, std::span<const double> x, std::span<const double> h_prev,
                        std::span<const double> c_prev) {
  const std::size_t H = p.hidden_dim();
  require_dims(x.size() == p.input_dim(), "lstm input " + std::to_string(x.size()) + " vs " +
                                              std::to_string(p.input_dim()));
  require_dims(h_prev.size() == H && c_prev.size() == H, "lstm state size");

  LstmStepCache s;
  s.x.assign(x.begin(), x.end());
  s.h_prev.assign(h_prev.begin(), h_prev.end());
  s.c_prev.assign(c_prev.begin(), c_prev.end());

  Vec pre;
  std::array<Vec*, 4> outs = {&s.i, &s.f, &s.o, &s.g};
  for (std::size_t g = 0; g < 4; ++g) {
    gate_preactivation(p.U[g], p.R[g], p.bias[g], x, h_prev, pre);
    Vec& out = *outs[g];
    out.resize(H);
    for (std::size_t r = 0; r < H; ++r)
      out[r] = (g == static_cast<std::size_t>(Gate::Candidate)) ? std::tanh(pre[r]) : sigmoid(pre[r]);
  }
  s.c.resize(H);
  s.h.resize(H);
  for (std::size_t r = 0; r < H; ++r) {
    s.c[r] = s.f[r] * c_prev[r] + s.i[r] * s.g[r];
    s.h[r] = s.o[r] * std::tanh(s.c[r]);
  }
  return s;
}

LstmTrace lstm_forward(const LstmParams& p, const std::vector<Vec>& inputs) {
  const std::size_t H = p.hidden_dim();
  LstmTrace trace;
  trace.steps.reserve(inputs.size());
  Vec h(H, 0.0), c(H, 0.0);
  for (const Vec& x : inputs) {
    trace.steps.push_back(lstm_step(p, x, h, c));
    h = trace.steps.back().h;
    c = trace.steps.back().c;
  }
  return trace;
}

void lstm_backward(const LstmParams& p, const LstmTrace& trace, const std::vector<Vec>& dh,
                   LstmParams& grad, std::vector<Vec>& dx) {
  const std::size_t H = p.hidden_dim(), K = p.input_dim(), S = trace.length();
  require_dims(dh.size() == S, "lstm backward: one dh per step");
  dx.assign(S, Vec(K, 0.0));
  Vec dh_next(H, 0.0), dc_next(H, 0.0);
  std::array<Vec, 4> da;
  for (auto& v : da) v.assign(H, 0.0);

  for (std::size_t s = S; s-- > 0;) {
    const LstmStepCache& st = trace.steps[s];
    require_dims(dh[s].size() == H, "lstm backward dh size");
    for (std::size_t r = 0; r < H; ++r) {
      const double dhr = dh[s][r] + dh_next[r];
      const double tc = std::tanh(st.c[r]);
      const double d_o = dhr * tc;
      const double dc = dhr * st.o[r] * (1.0 - tc * tc) + dc_next[r];
      const double d_i = dc * st.g[r];
      const double d_g = dc * st.i[r];
      const double d_f = dc * st.c_prev[r];
      dc_next[r] = dc * st.f[r];
      da[0][r] = d_i * st.i[r] * (1.0 - st.i[r]);
      da[1][r] = d_f * st.f[r] * (1.0 - st.f[r]);
      da[2][r] = d_o * st.o[r] * (1.0 - st.o[r]);
      da[3][r] = d_g * (1.0 - st.g[r] * st.g[r]);
    }
    std::fill(dh_next.begin(), dh_next.end(), 0.0);
    Vec& dxs = dx[s];
    for (std::size_t g = 0; g < 4; ++g) {
      const Vec& a = da[g];
      double* gu = grad.U[g].values().data();
      double* gr = grad.R[g].values().data();
      const double* u = p.U[g].values().data();
      const double* rw = p.R[g].values().data();
      for (std::size_t r = 0; r < H; ++r) {
        const double ar = a[r];
        grad.bias[g][r] += ar;
        if (ar == 0.0) continue;
        for (std::size_t c = 0; c < K; ++c) {
          gu[r * K + c] += ar * st.x[c];
          dxs[c] += u[r * K + c] * ar;
        }
        for (std::size_t c = 0; c < H; ++c) {
          gr[r * H + c] += ar * st.h_prev[c];
          dh_next[c] += rw[r * H + c] * ar;
        }
      }
    }
  }
}

}  // namespace cliniseq
