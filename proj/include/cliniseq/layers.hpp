#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "cliniseq/tensor.hpp"

namespace cliniseq {

// y = W x (+ b). W is out x in.
struct AffineParams {
  Tensor W;
  std::optional<Tensor> b;

  static AffineParams zeros(std::size_t out, std::size_t in, bool with_bias);
  std::size_t out_dim() const { return W.rows(); }
  std::size_t in_dim() const { return W.cols(); }
  bool has_bias() const { return b.has_value(); }
};

Vec affine_forward(const AffineParams& p, std::span<const double> x);
Vec affine_forward(const AffineParams& p, const SparseVec& x);

// Accumulates dL/dW and dL/db into grad; writes dL/dx into dx when given.
void affine_backward(const AffineParams& p, std::span<const double> x, std::span<const double> dy,
                     AffineParams& grad, Vec* dx = nullptr);
void affine_backward(const AffineParams& p, const SparseVec& x, std::span<const double> dy,
                     AffineParams& grad);

double sigmoid(double x);

Vec relu(std::span<const double> x);
Vec sigmoid(std::span<const double> x);
Vec tanh(std::span<const double> x);
// Max-subtracted softmax.
Vec softmax(std::span<const double> x);

// dL/dpre given the pre-activation and dL/dout.
Vec relu_backward(std::span<const double> pre, std::span<const double> dout);
// dL/dlogits given softmax output y and dL/dy.
Vec softmax_backward(std::span<const double> y, std::span<const double> dy);

enum class Gate : std::size_t { Input = 0, Forget = 1, Output = 2, Candidate = 3 };
inline constexpr std::array<Gate, 4> kGates = {Gate::Input, Gate::Forget, Gate::Output, Gate::Candidate};
inline constexpr std::array<char, 4> kGateSuffix = {'i', 'f', 'o', 'c'};

// Input weights U (H x K), recurrent weights R (H x H), bias (H) for each gate.
struct LstmParams {
  std::array<Tensor, 4> U;
  std::array<Tensor, 4> R;
  std::array<Tensor, 4> bias;

  static LstmParams zeros(std::size_t hidden, std::size_t input);
  std::size_t hidden_dim() const { return R[0].rows(); }
  std::size_t input_dim() const { return U[0].cols(); }

  Tensor& input_weights(Gate g) { return U[static_cast<std::size_t>(g)]; }
  Tensor& recurrent_weights(Gate g) { return R[static_cast<std::size_t>(g)]; }
  Tensor& gate_bias(Gate g) { return bias[static_cast<std::size_t>(g)]; }
};

struct LstmStepCache {
  Vec x, h_prev, c_prev;
  Vec i, f, o, g;  // gate activations
  Vec c, h;
};

LstmStepCache lstm_step(const LstmParams& p, std::span<const double> x, std::span<const double> h_prev,
                        std::span<const double> c_prev);

struct LstmTrace {
  std::vector<LstmStepCache> steps;
  const Vec& hidden(std::size_t s) const { return steps[s].h; }
  std::size_t length() const { return steps.size(); }
};

// Zero initial state, one step per input.
LstmTrace lstm_forward(const LstmParams& p, const std::vector<Vec>& inputs);

// BPTT. dh[s] is the external gradient on h at step s. Parameter gradients are
// accumulated into grad; dx receives dL/dx per step.
void lstm_backward(const LstmParams& p, const LstmTrace& trace, const std::vector<Vec>& dh,
                   LstmParams& grad, std::vector<Vec>& dx);

}  // namespace cliniseq
