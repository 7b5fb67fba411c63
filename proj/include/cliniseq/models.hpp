#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cliniseq/layers.hpp"
#include "cliniseq/tensor.hpp"

namespace cliniseq::models {

enum class ModelKind { LstmLda, LstmE, LstmED, LstmETD };

std::string_view kind_name(ModelKind kind);  // lstm_lda, lstm_e, lstm_ed, lstm_etd
ModelKind parse_kind(std::string_view name);

inline bool has_encoder(ModelKind k) { return k != ModelKind::LstmLda; }
inline bool has_decoder(ModelKind k) { return k == ModelKind::LstmED || k == ModelKind::LstmETD; }
inline bool has_transcoder(ModelKind k) { return k == ModelKind::LstmETD; }

struct ModelDims {
  std::size_t V = 0;    // vocabulary (unused by LSTM+LDA)
  std::size_t K = 50;   // topic layer
  std::size_t H = 128;  // LSTM hidden layer
};

// Encoder (K x V, bias, ReLU), optional Transcoder (K x K, bias, ReLU),
// optional Decoder (V x K, no bias, softmax), LSTM (H x K) and a 2-way
// softmax output layer on the hidden state.
struct JointModelParams {
  ModelKind kind = ModelKind::LstmE;
  ModelDims dims;
  std::optional<AffineParams> encoder;
  std::optional<AffineParams> transcoder;
  std::optional<AffineParams> decoder;
  LstmParams lstm;
  AffineParams output;

  static JointModelParams zeros(ModelKind kind, const ModelDims& dims);

  // Stable order: encoder.W, encoder.b, transcoder.W, transcoder.b,
  // decoder.W, lstm.U*, lstm.R*, lstm.b*, output.W, output.b.
  std::vector<std::pair<std::string, Tensor*>> named_tensors();
  std::vector<std::pair<std::string, const Tensor*>> named_tensors() const;

  std::size_t parameter_count() const;
  Vec flatten() const;
  void unflatten(std::span<const double> values);
};

// Uniform(-s, s) weights with s = 1/sqrt(fan-in), zero biases, forget-gate
// bias 1. Each tensor draws from its own stream keyed by name, so tensors
// shared between kinds start identical under the same seed.
JointModelParams init_params(ModelKind kind, const ModelDims& dims, std::uint64_t seed);

struct TrainConfig {
  double lambda1 = 1e-2;
  double lambda2 = 0.0;
  double lambda3 = 1.0;
  double cfn = 1.0;
  double lr = 1e-3;
  std::size_t batch_size = 10;
  std::size_t steps = 100000;
  std::uint64_t seed = 1;
  std::size_t log_every = 100;
  std::size_t eval_every = 500;
  // Apply lambda3 * |theta_D|_1 to LSTM+E+D as well as LSTM+E+T+D.
  bool decoder_l1 = true;
  // Tensors (by name) excluded from updates.
  std::set<std::string> frozen;

  void validate() const;
};

struct TimePointTrace {
  bool empty = true;
  Vec encoder_pre;      // pre-ReLU encoder output (empty for LSTM+LDA)
  Vec z;                // topic-layer vector fed to the LSTM
  Vec transcoder_pre;   // pre-ReLU transcoder output
  Vec zhat;             // sparse topic vector (LSTM+E+T+D)
  Vec xhat;             // reconstruction (non-empty points of decoder kinds)
  Vec h;                // hidden state used for the prediction
  double yhat = 0.5;    // positive-class probability
};

struct ForwardTrace {
  std::vector<TimePointTrace> steps;
  LstmTrace lstm;                       // over non-empty time points only
  std::vector<std::size_t> lstm_steps;  // time index (0-based) of each LSTM step

  std::size_t nonempty() const { return lstm_steps.size(); }
};

// inputs[t] is the normalized bag of words over V (or, for LSTM+LDA, a topic
// vector over K). Empty time points do not advance the LSTM; their prediction
// reuses the carried hidden state.
ForwardTrace forward(const JointModelParams& params, const std::vector<SparseVec>& inputs);

// Mean over non-empty time points of the prediction, reconstruction and
// sparsity terms, plus lambda3 * |theta_D|_1.
double loss(const JointModelParams& params, const ForwardTrace& trace, const std::vector<SparseVec>& inputs,
            bool label, const TrainConfig& config);

// Exact (sub)gradient of loss with respect to every parameter tensor.
JointModelParams backward(const JointModelParams& params, const ForwardTrace& trace,
                          const std::vector<SparseVec>& inputs, bool label, const TrainConfig& config);

std::pair<double, JointModelParams> loss_and_gradient(const JointModelParams& params,
                                                      const std::vector<SparseVec>& inputs, bool label,
                                                      const TrainConfig& config);

// yhat at every time point.
Vec predict(const JointModelParams& params, const std::vector<SparseVec>& inputs);

struct Example {
  std::string patient_id;
  std::vector<SparseVec> inputs;
  bool label = false;
};

struct TrainData {
  std::vector<Example> train;
  std::vector<Example> validation;
};

struct MetricsRow {
  std::size_t step = 0;
  std::optional<double> train_loss;
  std::optional<double> val_auc;
};

struct TrainResult {
  JointModelParams params;
  std::vector<MetricsRow> metrics;
  std::vector<double> step_losses;  // mean batch loss per step
  std::size_t best_step = 0;
  std::optional<double> best_val_auc;
};

using ProgressFn = std::function<void(const MetricsRow&)>;

// Adam on per-step batches sampled uniformly with replacement. Returns the
// parameters at the evaluation step with the best final-time-point
// validation AUC (the last step when no AUC is available). Throws
// NumericError on a non-finite loss.
TrainResult train(const TrainData& data, const JointModelParams& init, const TrainConfig& config,
                  const ProgressFn& progress = {});

std::vector<Vec> predict_all(const JointModelParams& params, const std::vector<Example>& examples);

inline constexpr std::string_view kMetricsCsvHeader = "step,train_loss,val_auc";
std::string format_metrics_csv(const std::vector<MetricsRow>& rows);

struct CfnSearchResult {
  double best_cfn = 1.0;
  std::vector<std::pair<double, double>> mean_val_auc;  // (cfn, mean AUC over time points)
  TrainResult best;
};

// Trains once per candidate and keeps the cfn with the highest mean
// validation AUC over time points; ties go to the smaller cfn.
CfnSearchResult cfn_grid_search(const TrainData& data, const JointModelParams& init, const TrainConfig& config,
                                const std::vector<double>& candidates = {1.0, 2.0, 4.0, 8.0});

}  // namespace cliniseq::models
