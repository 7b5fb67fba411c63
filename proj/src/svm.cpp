#include "cliniseq/svm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cliniseq/error.hpp"
#include "cliniseq/eval.hpp"
#include "cliniseq/lda.hpp"
#include "cliniseq/parallel.hpp"
#include "cliniseq/rng.hpp"

namespace cliniseq::svm {

SvmGrid SvmGrid::standard() {
  SvmGrid g;
  for (int e = -5; e <= 15; e += 2) g.C.push_back(std::ldexp(1.0, e));
  g.pos_weight = {1.0, 3.0, 5.0, 7.0, 9.0};
  return g;
}

namespace {

double margin(const Vec& w, double b, std::span<const double> x) {
  double s = b;
  for (std::size_t k = 0; k < w.size(); ++k) s += w[k] * x[k];
  return s;
}

void check_examples(const std::vector<Vec>& x, std::span<const int> y) {
  require_dims(x.size() == y.size(), "svm: one label per example");
  bool pos = false, neg = false;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] != 1 && y[i] != -1) throw InputError("svm labels must be +1 or -1");
    (y[i] > 0 ? pos : neg) = true;
    require_dims(x[i].size() == x.front().size(), "svm: feature vectors differ in length");
  }
  if (!pos || !neg) throw InputError("svm training needs both classes");
}

}  // namespace

double objective(const Vec& w, double b, const std::vector<Vec>& x, std::span<const int> y, double C,
                 double pos_weight) {
  double reg = 0.0;
  for (double v : w) reg += v * v;
  double loss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double h = std::max(0.0, 1.0 - y[i] * margin(w, b, x[i]));
    loss += (y[i] > 0 ? pos_weight : 1.0) * h;
  }
  return 0.5 * reg + C * loss;
}

double best_bias(const Vec& w, const std::vector<Vec>& x, std::span<const int> y, double pos_weight) {
  // Hinge term i has a kink at b = y_i - w.x_i; the slope starts at -(total
  // positive weight) and each kink adds its weight.
  std::vector<std::pair<double, double>> kinks;
  kinks.reserve(x.size());
  double slope = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double s = y[i] > 0 ? pos_weight : 1.0;
    kinks.emplace_back(y[i] - margin(w, 0.0, x[i]), s);
    if (y[i] > 0) slope -= s;
  }
  std::sort(kinks.begin(), kinks.end());
  for (const auto& [b, s] : kinks) {
    slope += s;
    if (slope >= 0.0) return b;
  }
  return kinks.empty() ? 0.0 : kinks.back().first;
}

SvmModel train_svm(const std::vector<Vec>& x, std::span<const int> y, double C, double pos_weight,
                   std::size_t epochs, std::uint64_t seed, SvmTrace* trace) {
  check_examples(x, y);
  if (!(C > 0.0) || !(pos_weight > 0.0)) throw InputError("svm: C and pos_weight must be positive");
  if (epochs == 0) throw InputError("svm: epochs must be positive");

  const std::size_t n = x.size(), K = x.front().size();
  const double lambda = 1.0 / (C * static_cast<double>(n));
  const double radius = std::sqrt(2.0 * std::max(1.0, pos_weight) / lambda);

  Vec w(K, 0.0);
  double b = 0.0;
  Vec w_avg(K, 0.0);
  double b_avg = 0.0;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  std::size_t i = 0;

  for (std::size_t epoch = 1; epoch <= epochs; ++epoch) {
    rng.shuffle(order);
    std::fill(w_avg.begin(), w_avg.end(), 0.0);
    b_avg = 0.0;
    const bool last = epoch == epochs;
    for (std::size_t j : order) {
      ++i;
      const double eta = 1.0 / (lambda * static_cast<double>(i));
      const double s = y[j] > 0 ? pos_weight : 1.0;
      const bool violated = y[j] * margin(w, b, x[j]) < 1.0;
      const double shrink = 1.0 - eta * lambda;
      for (std::size_t k = 0; k < K; ++k) w[k] *= shrink;
      if (violated) {
        for (std::size_t k = 0; k < K; ++k) w[k] += eta * s * y[j] * x[j][k];
        b += eta * s * y[j];
      }
      double norm = 0.0;
      for (double v : w) norm += v * v;
      norm = std::sqrt(norm);
      if (norm > radius)
        for (double& v : w) v *= radius / norm;
      for (std::size_t k = 0; k < K; ++k) w_avg[k] += w[k];
      b_avg += b;
      if (trace && last) trace->final_epoch_objectives.push_back(objective(w, b, x, y, C, pos_weight));
    }
    for (double& v : w_avg) v /= static_cast<double>(n);
    b_avg /= static_cast<double>(n);
    if (trace) trace->epoch_objectives.push_back(objective(w_avg, b_avg, x, y, C, pos_weight));
  }

  if (trace) trace->averaged_objective = objective(w_avg, b_avg, x, y, C, pos_weight);
  SvmModel model;
  model.b = best_bias(w_avg, x, y, pos_weight);
  model.w = std::move(w_avg);
  model.C = C;
  model.pos_weight = pos_weight;
  return model;
}

double svm_score(const SvmModel& model, std::span<const double> x) {
  require_dims(x.size() == model.w.size(), "svm_score: feature dimension " + std::to_string(x.size()) +
                                               " vs model " + std::to_string(model.w.size()));
  return margin(model.w, model.b, x);
}

GridResult grid_search_svm(const std::vector<Vec>& train_x, std::span<const int> train_y,
                           const std::vector<Vec>& val_x, std::span<const int> val_y, const SvmGrid& grid,
                           std::size_t epochs, std::uint64_t seed) {
  if (grid.C.empty() || grid.pos_weight.empty()) throw InputError("svm grid is empty");
  if (val_x.empty()) throw InputError("svm grid search needs validation examples");
  require_dims(val_x.size() == val_y.size(), "svm: one validation label per example");
  check_examples(train_x, train_y);

  std::vector<std::uint8_t> val_labels(val_y.size());
  for (std::size_t i = 0; i < val_y.size(); ++i) val_labels[i] = val_y[i] > 0 ? 1 : 0;

  const std::size_t n_cells = grid.C.size() * grid.pos_weight.size();
  GridResult result;
  result.cells.resize(n_cells);
  std::vector<SvmModel> models(n_cells);
  parallel_for(n_cells, [&](std::size_t c) {
    GridCell& cell = result.cells[c];
    cell.C = grid.C[c / grid.pos_weight.size()];
    cell.pos_weight = grid.pos_weight[c % grid.pos_weight.size()];
    models[c] = train_svm(train_x, train_y, cell.C, cell.pos_weight, epochs, seed);
    std::vector<double> scores(val_x.size());
    for (std::size_t i = 0; i < val_x.size(); ++i) scores[i] = svm_score(models[c], val_x[i]);
    cell.val_auc = eval::auc(scores, val_labels);
  });

  auto better = [&](std::size_t a, std::size_t b) {
    const GridCell &ca = result.cells[a], &cb = result.cells[b];
    if (ca.val_auc.has_value() != cb.val_auc.has_value()) return ca.val_auc.has_value();
    if (ca.val_auc && *ca.val_auc != *cb.val_auc) return *ca.val_auc > *cb.val_auc;
    if (ca.C != cb.C) return ca.C < cb.C;
    return ca.pos_weight < cb.pos_weight;
  };
  for (std::size_t c = 1; c < n_cells; ++c)
    if (better(c, result.selected)) result.selected = c;
  result.model = std::move(models[result.selected]);
  return result;
}

TimePointSet time_point_set(const std::vector<std::vector<Vec>>& thetas, std::span<const std::uint8_t> labels,
                            std::size_t t) {
  require_dims(thetas.size() == labels.size(), "svm: one label per sequence");
  if (t == 0) throw InputError("time points are 1-based");
  TimePointSet set;
  for (std::size_t p = 0; p < thetas.size(); ++p) {
    if (thetas[p].size() < t) continue;
    set.features.push_back(lda::average_theta_upto(thetas[p], t));
    set.labels.push_back(labels[p] ? 1 : -1);
    set.patients.push_back(p);
  }
  return set;
}

namespace {

bool has_both(std::span<const int> y) {
  bool pos = false, neg = false;
  for (int v : y) (v > 0 ? pos : neg) = true;
  return pos && neg;
}

}  // namespace

SvmLdaModel train_svm_lda(const std::vector<std::vector<Vec>>& train_thetas,
                          std::span<const std::uint8_t> train_labels,
                          const std::vector<std::vector<Vec>>& val_thetas, std::span<const std::uint8_t> val_labels,
                          const SvmLdaOptions& options) {
  SvmLdaModel model;
  for (std::size_t t = 1; options.max_time_points == 0 || t <= options.max_time_points; ++t) {
    const TimePointSet train = time_point_set(train_thetas, train_labels, t);
    const TimePointSet val = time_point_set(val_thetas, val_labels, t);
    if (!has_both(train.labels) || !has_both(val.labels)) break;
    GridResult r = grid_search_svm(train.features, train.labels, val.features, val.labels, options.grid,
                                   options.epochs, mix_seed(options.seed, t));
    model.per_time_point.push_back(std::move(r.model));
    model.train_sizes.push_back(train.features.size());
  }
  if (model.per_time_point.empty())
    throw InputError("svm+lda: the first time point lacks positive or negative examples");
  return model;
}

Vec score_sequence(const SvmLdaModel& model, const std::vector<Vec>& thetas) {
  if (model.per_time_point.empty()) throw InputError("svm+lda model has no classifiers");
  Vec out(thetas.size());
  for (std::size_t t = 1; t <= thetas.size(); ++t) {
    const SvmModel& m = model.per_time_point[std::min(t, model.per_time_point.size()) - 1];
    out[t - 1] = svm_score(m, lda::average_theta_upto(thetas, t));
  }
  return out;
}

}  // namespace cliniseq::svm
