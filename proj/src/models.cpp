#include "cliniseq/models.hpp"

#include <algorithm>
#include <cmath>

#include "cliniseq/corpus_io.hpp"
#include "cliniseq/error.hpp"
#include "cliniseq/eval.hpp"
#include "cliniseq/losses.hpp"
#include "cliniseq/optim.hpp"
#include "cliniseq/parallel.hpp"
#include "cliniseq/rng.hpp"

namespace cliniseq::models {

std::string_view kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::LstmLda: return "lstm_lda";
    case ModelKind::LstmE: return "lstm_e";
    case ModelKind::LstmED: return "lstm_ed";
    case ModelKind::LstmETD: return "lstm_etd";
  }
  return "lstm_e";
}

ModelKind parse_kind(std::string_view name) {
  if (name == "lstm_lda") return ModelKind::LstmLda;
  if (name == "lstm_e") return ModelKind::LstmE;
  if (name == "lstm_ed") return ModelKind::LstmED;
  if (name == "lstm_etd") return ModelKind::LstmETD;
  throw InputError("unknown model kind '" + std::string(name) + "'");
}

JointModelParams JointModelParams::zeros(ModelKind kind, const ModelDims& dims) {
  if (dims.K == 0 || dims.H == 0 || (has_encoder(kind) && dims.V == 0))
    throw InputError("model dimensions must be positive");
  JointModelParams p;
  p.kind = kind;
  p.dims = dims;
  if (has_encoder(kind)) p.encoder = AffineParams::zeros(dims.K, dims.V, true);
  if (has_transcoder(kind)) p.transcoder = AffineParams::zeros(dims.K, dims.K, true);
  if (has_decoder(kind)) p.decoder = AffineParams::zeros(dims.V, dims.K, false);
  p.lstm = LstmParams::zeros(dims.H, dims.K);
  p.output = AffineParams::zeros(2, dims.H, true);
  return p;
}

namespace {

template <typename Params, typename TensorPtr>
std::vector<std::pair<std::string, TensorPtr>> collect(Params& p) {
  std::vector<std::pair<std::string, TensorPtr>> out;
  if (p.encoder) {
    out.emplace_back("encoder.W", &p.encoder->W);
    out.emplace_back("encoder.b", &*p.encoder->b);
  }
  if (p.transcoder) {
    out.emplace_back("transcoder.W", &p.transcoder->W);
    out.emplace_back("transcoder.b", &*p.transcoder->b);
  }
  if (p.decoder) out.emplace_back("decoder.W", &p.decoder->W);
  for (std::size_t g = 0; g < 4; ++g) out.emplace_back(std::string("lstm.U") + kGateSuffix[g], &p.lstm.U[g]);
  for (std::size_t g = 0; g < 4; ++g) out.emplace_back(std::string("lstm.R") + kGateSuffix[g], &p.lstm.R[g]);
  for (std::size_t g = 0; g < 4; ++g) out.emplace_back(std::string("lstm.b") + kGateSuffix[g], &p.lstm.bias[g]);
  out.emplace_back("output.W", &p.output.W);
  out.emplace_back("output.b", &*p.output.b);
  return out;
}

}  // namespace

std::vector<std::pair<std::string, Tensor*>> JointModelParams::named_tensors() {
  return collect<JointModelParams, Tensor*>(*this);
}

std::vector<std::pair<std::string, const Tensor*>> JointModelParams::named_tensors() const {
  return collect<const JointModelParams, const Tensor*>(*this);
}

std::size_t JointModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : named_tensors()) n += t->size();
  return n;
}

Vec JointModelParams::flatten() const {
  Vec out;
  out.reserve(parameter_count());
  for (const auto& [name, t] : named_tensors()) out.insert(out.end(), t->values().begin(), t->values().end());
  return out;
}

void JointModelParams::unflatten(std::span<const double> values) {
  require_dims(values.size() == parameter_count(), "unflatten: parameter count");
  std::size_t off = 0;
  for (auto& [name, t] : named_tensors()) {
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(off), t->size(), t->values().begin());
    off += t->size();
  }
}

JointModelParams init_params(ModelKind kind, const ModelDims& dims, std::uint64_t seed) {
  JointModelParams p = JointModelParams::zeros(kind, dims);
  for (auto& [name, t] : p.named_tensors()) {
    if (t->rank() == 1) {
      if (name == "lstm.bf") t->fill(1.0);
      continue;
    }
    const double s = 1.0 / std::sqrt(static_cast<double>(t->cols()));
    Rng rng(mix_seed(seed, name));
    for (double& v : t->values()) v = rng.uniform(-s, s);
  }
  return p;
}

void TrainConfig::validate() const {
  if (lambda1 < 0 || lambda2 < 0 || lambda3 < 0) throw InputError("loss weights must be >= 0");
  if (!(cfn >= 1.0)) throw InputError("cfn must be >= 1");
  if (!(lr > 0.0)) throw InputError("learning rate must be positive");
  if (batch_size == 0) throw InputError("batch size must be positive");
  if (log_every == 0 || eval_every == 0) throw InputError("logging intervals must be positive");
}

ForwardTrace forward(const JointModelParams& params, const std::vector<SparseVec>& inputs) {
  const std::size_t K = params.dims.K, H = params.dims.H;
  ForwardTrace tr;
  tr.steps.resize(inputs.size());
  std::vector<Vec> lstm_inputs;
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    TimePointTrace& st = tr.steps[t];
    st.empty = inputs[t].empty();
    if (params.encoder) {
      st.encoder_pre = affine_forward(*params.encoder, inputs[t]);
      st.z = relu(st.encoder_pre);
    } else {
      st.z = inputs[t].to_dense(K);
    }
    if (st.empty) continue;
    lstm_inputs.push_back(st.z);
    tr.lstm_steps.push_back(t);
    if (params.decoder) {
      if (params.transcoder) {
        st.transcoder_pre = affine_forward(*params.transcoder, st.z);
        st.zhat = relu(st.transcoder_pre);
        st.xhat = softmax(affine_forward(*params.decoder, st.zhat));
      } else {
        st.xhat = softmax(affine_forward(*params.decoder, st.z));
      }
    }
  }
  tr.lstm = lstm_forward(params.lstm, lstm_inputs);

  const Vec zero_state(H, 0.0);
  const Vec* h = &zero_state;
  std::size_t s = 0;
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    TimePointTrace& st = tr.steps[t];
    if (!st.empty) h = &tr.lstm.steps[s++].h;
    st.h = *h;
    st.yhat = softmax(affine_forward(params.output, st.h))[1];
  }
  return tr;
}

namespace {

bool decoder_penalized(const JointModelParams& params, const TrainConfig& config) {
  if (!params.decoder || config.lambda3 == 0.0) return false;
  return params.kind == ModelKind::LstmETD || config.decoder_l1;
}

// Accumulates the gradient of loss into grad.
void backward_into(const JointModelParams& params, const ForwardTrace& trace, const std::vector<SparseVec>& inputs,
                   bool label, const TrainConfig& config, JointModelParams& grad) {
  const double y = label ? 1.0 : 0.0;
  const std::size_t S = trace.nonempty();
  if (S > 0) {
    const double w = 1.0 / static_cast<double>(S);
    std::vector<Vec> dh(S);
    std::vector<Vec> dz_extra(S);
    for (std::size_t s = 0; s < S; ++s) {
      const std::size_t t = trace.lstm_steps[s];
      const TimePointTrace& st = trace.steps[t];

      const double p = st.yhat;
      const double dp = w * weighted_ce_grad(p, y, config.cfn);
      const double d1 = dp * p * (1.0 - p);
      const Vec dlogits = {-d1, d1};
      affine_backward(params.output, st.h, dlogits, grad.output, &dh[s]);

      if (params.transcoder) {
        Vec dzhat(params.dims.K, 0.0);
        if (config.lambda1 != 0.0) {
          Vec dx = categorical_ce_grad(st.xhat, inputs[t]);
          for (double& v : dx) v *= w * config.lambda1;
          affine_backward(*params.decoder, st.zhat, softmax_backward(st.xhat, dx), *grad.decoder, &dzhat);
        }
        if (config.lambda2 != 0.0)
          for (std::size_t k = 0; k < dzhat.size(); ++k)
            dzhat[k] += w * config.lambda2 * (st.zhat[k] > 0.0 ? 1.0 : (st.zhat[k] < 0.0 ? -1.0 : 0.0));
        affine_backward(*params.transcoder, st.z, relu_backward(st.transcoder_pre, dzhat), *grad.transcoder,
                        &dz_extra[s]);
      } else if (params.decoder && config.lambda1 != 0.0) {
        Vec dx = categorical_ce_grad(st.xhat, inputs[t]);
        for (double& v : dx) v *= w * config.lambda1;
        affine_backward(*params.decoder, st.z, softmax_backward(st.xhat, dx), *grad.decoder, &dz_extra[s]);
      }
    }

    std::vector<Vec> dz;
    lstm_backward(params.lstm, trace.lstm, dh, grad.lstm, dz);

    if (params.encoder) {
      for (std::size_t s = 0; s < S; ++s) {
        const std::size_t t = trace.lstm_steps[s];
        if (!dz_extra[s].empty())
          for (std::size_t k = 0; k < dz[s].size(); ++k) dz[s][k] += dz_extra[s][k];
        affine_backward(*params.encoder, inputs[t], relu_backward(trace.steps[t].encoder_pre, dz[s]), *grad.encoder);
      }
    }
  }
  if (decoder_penalized(params, config)) {
    const Tensor& W = params.decoder->W;
    Tensor& G = grad.decoder->W;
    for (std::size_t i = 0; i < W.size(); ++i)
      G[i] += config.lambda3 * (W[i] > 0.0 ? 1.0 : (W[i] < 0.0 ? -1.0 : 0.0));
  }
}

}  // namespace

double loss(const JointModelParams& params, const ForwardTrace& trace, const std::vector<SparseVec>& inputs,
            bool label, const TrainConfig& config) {
  const double y = label ? 1.0 : 0.0;
  const std::size_t S = trace.nonempty();
  double total = 0.0;
  for (std::size_t s = 0; s < S; ++s) {
    const std::size_t t = trace.lstm_steps[s];
    const TimePointTrace& st = trace.steps[t];
    double term = weighted_ce(st.yhat, y, config.cfn);
    if (params.decoder && config.lambda1 != 0.0) term += config.lambda1 * categorical_ce(st.xhat, inputs[t]);
    if (params.transcoder && config.lambda2 != 0.0) term += config.lambda2 * l1_norm(st.zhat);
    total += term;
  }
  double value = S > 0 ? total / static_cast<double>(S) : 0.0;
  if (decoder_penalized(params, config)) value += config.lambda3 * l1_norm(params.decoder->W.values());
  return value;
}

JointModelParams backward(const JointModelParams& params, const ForwardTrace& trace,
                          const std::vector<SparseVec>& inputs, bool label, const TrainConfig& config) {
  JointModelParams grad = JointModelParams::zeros(params.kind, params.dims);
  backward_into(params, trace, inputs, label, config, grad);
  return grad;
}

std::pair<double, JointModelParams> loss_and_gradient(const JointModelParams& params,
                                                      const std::vector<SparseVec>& inputs, bool label,
                                                      const TrainConfig& config) {
  const ForwardTrace trace = forward(params, inputs);
  return {loss(params, trace, inputs, label, config), backward(params, trace, inputs, label, config)};
}

Vec predict(const JointModelParams& params, const std::vector<SparseVec>& inputs) {
  const ForwardTrace trace = forward(params, inputs);
  Vec out(trace.steps.size());
  for (std::size_t t = 0; t < out.size(); ++t) out[t] = trace.steps[t].yhat;
  return out;
}

std::vector<Vec> predict_all(const JointModelParams& params, const std::vector<Example>& examples) {
  std::vector<Vec> out(examples.size());
  parallel_for(examples.size(), [&](std::size_t i) { out[i] = predict(params, examples[i].inputs); });
  return out;
}

namespace {

std::optional<double> validation_auc(const JointModelParams& params, const std::vector<Example>& validation) {
  if (validation.empty()) return std::nullopt;
  std::vector<std::uint8_t> labels;
  for (const auto& e : validation) labels.push_back(e.label ? 1 : 0);
  return eval::final_time_point_auc(predict_all(params, validation), labels);
}

}  // namespace

TrainResult train(const TrainData& data, const JointModelParams& init, const TrainConfig& config,
                  const ProgressFn& progress) {
  config.validate();
  if (data.train.empty()) throw InputError("training set is empty");

  TrainResult result;
  result.params = init;
  if (config.steps == 0) return result;

  JointModelParams params = init;
  std::vector<Tensor*> trainable;
  std::vector<std::size_t> trainable_index;
  {
    auto named = params.named_tensors();
    for (std::size_t i = 0; i < named.size(); ++i)
      if (!config.frozen.count(named[i].first)) {
        trainable.push_back(named[i].second);
        trainable_index.push_back(i);
      }
  }
  AdamState adam = AdamState::for_params(trainable);

  const std::size_t B = config.batch_size;
  std::vector<JointModelParams> sample_grads(B, JointModelParams::zeros(params.kind, params.dims));
  std::vector<double> sample_loss(B);
  JointModelParams batch_grad = JointModelParams::zeros(params.kind, params.dims);
  Rng batch_rng(mix_seed(config.seed, "batches"));

  JointModelParams best = params;
  std::optional<double> best_auc;
  std::size_t best_step = config.steps;
  double window_loss = 0.0;
  std::size_t window = 0;

  for (std::size_t step = 1; step <= config.steps; ++step) {
    std::vector<std::size_t> batch(B);
    for (auto& b : batch) b = static_cast<std::size_t>(batch_rng.uniform_int(data.train.size()));

    parallel_for(B, [&](std::size_t i) {
      JointModelParams& g = sample_grads[i];
      for (auto& [name, t] : g.named_tensors()) t->fill(0.0);
      const Example& ex = data.train[batch[i]];
      const ForwardTrace trace = forward(params, ex.inputs);
      sample_loss[i] = loss(params, trace, ex.inputs, ex.label, config);
      backward_into(params, trace, ex.inputs, ex.label, config, g);
    });

    double batch_loss = 0.0;
    auto acc = batch_grad.named_tensors();
    for (auto& [name, t] : acc) t->fill(0.0);
    for (std::size_t i = 0; i < B; ++i) {
      batch_loss += sample_loss[i];
      auto src = sample_grads[i].named_tensors();
      for (std::size_t k = 0; k < acc.size(); ++k) {
        auto dst = acc[k].second->values();
        auto from = src[k].second->values();
        for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += from[j];
      }
    }
    const double scale = 1.0 / static_cast<double>(B);
    batch_loss *= scale;
    if (!std::isfinite(batch_loss))
      throw NumericError("non-finite training loss at step " + std::to_string(step));
    for (auto& [name, t] : acc)
      for (double& v : t->values()) v *= scale;

    std::vector<const Tensor*> grads;
    grads.reserve(trainable_index.size());
    for (auto i : trainable_index) grads.push_back(acc[i].second);
    adam_update(trainable, grads, adam, config.lr);

    result.step_losses.push_back(batch_loss);
    window_loss += batch_loss;
    ++window;

    MetricsRow row;
    row.step = step;
    if (step % config.log_every == 0 || step == config.steps) {
      row.train_loss = window_loss / static_cast<double>(window);
      window_loss = 0.0;
      window = 0;
    }
    if (!data.validation.empty() && (step % config.eval_every == 0 || step == config.steps)) {
      row.val_auc = validation_auc(params, data.validation);
      if (row.val_auc && (!best_auc || *row.val_auc > *best_auc)) {
        best_auc = row.val_auc;
        best = params;
        best_step = step;
      }
    }
    if (row.train_loss || row.val_auc) {
      result.metrics.push_back(row);
      if (progress) progress(row);
    }
  }

  if (best_auc) {
    result.params = std::move(best);
    result.best_step = best_step;
    result.best_val_auc = best_auc;
  } else {
    result.params = std::move(params);
    result.best_step = config.steps;
  }
  return result;
}

std::string format_metrics_csv(const std::vector<MetricsRow>& rows) {
  std::string out(kMetricsCsvHeader);
  out += '\n';
  for (const auto& r : rows) {
    out += std::to_string(r.step) + ',' + (r.train_loss ? corpus::format_real(*r.train_loss) : "") + ',' +
           (r.val_auc ? corpus::format_real(*r.val_auc) : "") + '\n';
  }
  return out;
}

CfnSearchResult cfn_grid_search(const TrainData& data, const JointModelParams& init, const TrainConfig& config,
                                const std::vector<double>& candidates) {
  if (candidates.empty()) throw InputError("cfn grid is empty");
  if (data.validation.empty()) throw InputError("cfn grid search needs a validation split");
  std::vector<double> grid = candidates;
  std::sort(grid.begin(), grid.end());

  std::vector<std::size_t> lengths;
  std::vector<std::uint8_t> labels;
  for (const auto& e : data.validation) {
    lengths.push_back(e.inputs.size());
    labels.push_back(e.label ? 1 : 0);
  }
  const std::size_t horizon = eval::default_horizon(lengths);

  CfnSearchResult out;
  std::optional<double> best_score;
  for (double cfn : grid) {
    TrainConfig c = config;
    c.cfn = cfn;
    TrainResult r = train(data, init, c);
    const auto report = eval::eval_per_time_point(predict_all(r.params, data.validation), labels, horizon);
    const double score = report.mean_auc().value_or(0.0);
    out.mean_val_auc.emplace_back(cfn, score);
    if (!best_score || score > *best_score) {
      best_score = score;
      out.best_cfn = cfn;
      out.best = std::move(r);
    }
  }
  return out;
}

}  // namespace cliniseq::models
