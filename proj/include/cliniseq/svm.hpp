#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cliniseq/tensor.hpp"

namespace cliniseq::svm {

struct SvmModel {
  Vec w;
  double b = 0.0;
  double C = 1.0;
  double pos_weight = 1.0;
};

struct SvmGrid {
  std::vector<double> C;
  std::vector<double> pos_weight;

  // C in {2^-5, 2^-3, ..., 2^15}, positive-class weight in {1, 3, 5, 7, 9}.
  static SvmGrid standard();
};

inline constexpr std::size_t kDefaultEpochs = 30;

// (1/2)|w|^2 + C * sum_i s_i * max(0, 1 - y_i (w.x_i + b)), s_i = pos_weight
// for positives and 1 for negatives. Labels are +1 / -1.
double objective(const Vec& w, double b, const std::vector<Vec>& x, std::span<const int> y, double C,
                 double pos_weight);

struct SvmTrace {
  std::vector<double> epoch_objectives;       // objective at each epoch's averaged iterate
  std::vector<double> final_epoch_objectives;  // objective at every iterate of the last epoch
  double averaged_objective = 0.0;             // objective at the average, before the bias refit
};

// Bias minimizing the objective for fixed w (exact, piecewise-linear search).
double best_bias(const Vec& w, const std::vector<Vec>& x, std::span<const int> y, double pos_weight);

// Pegasos-style subgradient descent with step 1/(lambda * i), lambda = 1/(C n),
// epoch-shuffled order, unregularized bias; returns the average of the
// iterates of the last epoch with the bias then refit exactly. Throws
// InputError on single-class input.
SvmModel train_svm(const std::vector<Vec>& x, std::span<const int> y, double C, double pos_weight,
                   std::size_t epochs, std::uint64_t seed, SvmTrace* trace = nullptr);

double svm_score(const SvmModel& model, std::span<const double> x);

struct GridCell {
  double C = 0.0;
  double pos_weight = 0.0;
  std::optional<double> val_auc;
};

struct GridResult {
  SvmModel model;              // trained at the selected cell
  std::vector<GridCell> cells;  // every cell, C-major
  std::size_t selected = 0;
};

// Exhaustive search maximizing validation AUC; ties go to the smaller C,
// then the smaller pos_weight. Cells without an AUC rank below all others.
GridResult grid_search_svm(const std::vector<Vec>& train_x, std::span<const int> train_y,
                           const std::vector<Vec>& val_x, std::span<const int> val_y, const SvmGrid& grid,
                           std::size_t epochs, std::uint64_t seed);

// Examples for the classifier of time point t (1-based): patients whose
// sequence has at least t points, featurized by the mean non-empty topic
// vector over points 1..t.
struct TimePointSet {
  std::vector<Vec> features;
  std::vector<int> labels;
  std::vector<std::size_t> patients;  // indices into the input sequences
};

TimePointSet time_point_set(const std::vector<std::vector<Vec>>& thetas, std::span<const std::uint8_t> labels,
                            std::size_t t);

struct SvmLdaModel {
  std::vector<SvmModel> per_time_point;     // classifier t at index t-1
  std::vector<std::size_t> train_sizes;     // training examples per classifier
};

struct SvmLdaOptions {
  SvmGrid grid = SvmGrid::standard();
  std::size_t epochs = kDefaultEpochs;
  std::size_t max_time_points = 0;  // 0: no cap
  std::uint64_t seed = 1;
};

// One classifier per time point while both the training and the validation
// set at t contain both classes.
SvmLdaModel train_svm_lda(const std::vector<std::vector<Vec>>& train_thetas,
                          std::span<const std::uint8_t> train_labels,
                          const std::vector<std::vector<Vec>>& val_thetas, std::span<const std::uint8_t> val_labels,
                          const SvmLdaOptions& options);

// Margin at every time point; points past the last classifier use the last one.
Vec score_sequence(const SvmLdaModel& model, const std::vector<Vec>& thetas);

}  // namespace cliniseq::svm
