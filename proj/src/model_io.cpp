#include "cliniseq/model_io.hpp"

#include <cmath>

#include "cliniseq/corpus_io.hpp"
#include "cliniseq/error.hpp"

namespace cliniseq::ckpt {

namespace {

std::string num(double v) { return corpus::format_real(v); }

void expect_shape(const Tensor& t, const Tensor& want, const std::string& name) {
  if (!t.same_shape(want))
    throw CompatibilityError("tensor '" + name + "' has shape " + t.shape_string() + ", expected " +
                             want.shape_string());
}

}  // namespace

void add_joint(Checkpoint& c, const models::JointModelParams& params) {
  c.metadata["kind"] = std::string(models::kind_name(params.kind));
  c.metadata["K"] = std::to_string(params.dims.K);
  c.metadata["H"] = std::to_string(params.dims.H);
  c.metadata["V"] = std::to_string(params.dims.V);
  for (const auto& [name, t] : params.named_tensors()) c.add(name, *t);
}

models::JointModelParams joint_from_checkpoint(const Checkpoint& c) {
  if (!c.meta("kind")) throw CompatibilityError("checkpoint does not hold a joint LSTM model");
  models::ModelKind kind;
  try {
    kind = models::parse_kind(c.require_meta("kind"));
  } catch (const InputError&) {
    throw CompatibilityError("checkpoint holds unknown model kind '" + c.require_meta("kind") + "'");
  }
  models::ModelDims dims{c.meta_size("V"), c.meta_size("K"), c.meta_size("H")};
  models::JointModelParams p = models::JointModelParams::zeros(kind, dims);
  for (auto& [name, t] : p.named_tensors()) {
    const Tensor& stored = c.tensor(name);
    expect_shape(stored, *t, name);
    *t = stored;
  }
  return p;
}

void add_lda(Checkpoint& c, const lda::LdaModel& model, const std::string& prefix) {
  c.metadata[prefix + "K"] = std::to_string(model.K);
  c.metadata[prefix + "V"] = std::to_string(model.V);
  c.metadata[prefix + "alpha"] = num(model.alpha);
  c.metadata[prefix + "beta"] = num(model.beta);
  c.add(prefix + "phi", model.phi);
  Tensor counts = Tensor::matrix(model.K, model.V);
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (model.topic_word_counts[i] > (std::int64_t{1} << 24))
      throw InputError("topic-word count exceeds 32-bit float precision");
    counts[i] = static_cast<double>(model.topic_word_counts[i]);
  }
  c.add(prefix + "topic_word_counts", std::move(counts));
}

lda::LdaModel lda_from_checkpoint(const Checkpoint& c, const std::string& prefix) {
  lda::LdaModel m;
  m.K = c.meta_size(prefix + "K");
  m.V = c.meta_size(prefix + "V");
  m.alpha = c.meta_real(prefix + "alpha");
  m.beta = c.meta_real(prefix + "beta");
  const Tensor shape = Tensor::matrix(m.K, m.V);
  const Tensor& counts = c.tensor(prefix + "topic_word_counts");
  expect_shape(counts, shape, prefix + "topic_word_counts");
  expect_shape(c.tensor(prefix + "phi"), shape, prefix + "phi");
  m.topic_word_counts.resize(counts.size());
  m.topic_totals.assign(m.K, 0);
  for (std::size_t i = 0; i < counts.size(); ++i) {
    m.topic_word_counts[i] = static_cast<std::int64_t>(std::llround(counts[i]));
    m.topic_totals[i / m.V] += m.topic_word_counts[i];
  }
  m.refresh_phi();
  return m;
}

void add_svm(Checkpoint& c, const svm::SvmLdaModel& model) {
  c.metadata["svm.time_points"] = std::to_string(model.per_time_point.size());
  for (std::size_t t = 1; t <= model.per_time_point.size(); ++t) {
    const auto& m = model.per_time_point[t - 1];
    const std::string key = "svm.t" + std::to_string(t);
    c.add(key + ".w", Tensor({m.w.size()}, m.w));
    c.metadata[key + ".b"] = num(m.b);
    c.metadata[key + ".C"] = num(m.C);
    c.metadata[key + ".pos_weight"] = num(m.pos_weight);
    c.metadata[key + ".n_train"] = std::to_string(model.train_sizes.at(t - 1));
  }
}

svm::SvmLdaModel svm_from_checkpoint(const Checkpoint& c) {
  svm::SvmLdaModel model;
  const std::size_t n = c.meta_size("svm.time_points");
  for (std::size_t t = 1; t <= n; ++t) {
    const std::string key = "svm.t" + std::to_string(t);
    svm::SvmModel m;
    const Tensor& w = c.tensor(key + ".w");
    m.w.assign(w.values().begin(), w.values().end());
    m.b = c.meta_real(key + ".b");
    m.C = c.meta_real(key + ".C");
    m.pos_weight = c.meta_real(key + ".pos_weight");
    model.per_time_point.push_back(std::move(m));
    model.train_sizes.push_back(c.meta_size(key + ".n_train"));
  }
  return model;
}

}  // namespace cliniseq::ckpt
