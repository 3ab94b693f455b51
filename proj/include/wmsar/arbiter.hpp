#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "wmsar/features.hpp"
#include "wmsar/signal_model.hpp"

namespace wmsar {

using Matrix = std::vector<std::vector<double>>;  // row-major feature rows

struct TrainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Per-column affine map fitted on training rows only.
struct Standardizer {
  std::vector<double> means;
  std::vector<double> scales;  // strictly positive; 1 for constant columns

  std::vector<double> apply(const std::vector<double>& x) const;
  Matrix apply(const Matrix& X) const;
};

Standardizer fit_standardizer(const Matrix& X);

// Inverse-frequency class weights: w_c = N / (2 * N_c). Index 0/1 by label.
std::array<double, 2> class_weights(const std::vector<int>& y);

struct TrainConfig {
  std::vector<double> c_grid = {0.01, 0.03, 0.1, 0.3, 1.0, 3.0, 10.0};
  int k_folds = 5;
  std::uint64_t seed = 0;
  double tolerance = 1e-8;  // gradient max-norm at convergence
  int max_iterations = 10000;
};

struct LrSolution {
  std::vector<double> weights;
  double bias = 0.0;
  int iterations = 0;
  double grad_max_norm = 0.0;
  bool converged = false;
};

// Weighted L2-regularized logistic regression on standardized rows.
// Objective: sum_i cw[y_i] * logloss_i + (1 / (2C)) * ||w||^2, bias free.
// Damped Newton with Armijo backtracking; throws TrainError when the
// gradient max-norm still exceeds cfg.tolerance after cfg.max_iterations.
LrSolution train_lr(const Matrix& Xstd, const std::vector<int>& y, double C,
                    const std::array<double, 2>& cw, const TrainConfig& cfg);

// The objective and its analytic gradient at theta = [w..., b], exposed so
// solutions can be audited independently of the solver.
double lr_objective(const Matrix& Xstd, const std::vector<int>& y, double C,
                    const std::array<double, 2>& cw,
                    const std::vector<double>& theta);
std::vector<double> lr_gradient(const Matrix& Xstd, const std::vector<int>& y,
                                double C, const std::array<double, 2>& cw,
                                const std::vector<double>& theta);

double sigmoid(double z);
double predict_proba_row(const std::vector<double>& weights, double bias,
                         const std::vector<double>& xstd);

// Deterministic stratified fold assignment; returns k disjoint index sets
// covering [0, n). Per-class counts across folds differ by at most 1.
std::vector<std::vector<std::size_t>> stratified_kfold(
    const std::vector<int>& y, int k, std::uint64_t seed);

// Accuracy-maximizing threshold over candidates {0, 1} and midpoints of
// adjacent sorted distinct probabilities. Ties prefer the candidate closest
// to 0.5, then the smaller one.
double optimal_threshold(const std::vector<double>& probs,
                         const std::vector<int>& y);

struct FoldResult {
  double c = 0.0;
  int fold = 0;
  double threshold = 0.0;      // fold-optimal
  double accuracy = 0.0;       // at fold-optimal threshold
  double macro_f1 = 0.0;       // at fold-optimal threshold
  double accuracy_at_half = 0.0;
  double macro_f1_at_half = 0.0;
};

struct CSummary {
  double c = 0.0;
  double mean_accuracy = 0.0;
  double mean_macro_f1 = 0.0;
};

struct CvReport {
  std::vector<FoldResult> folds;  // |c_grid| * k rows, grid-major
  std::vector<CSummary> c_summaries;
  double best_c = 0.0;
  double best_threshold = 0.0;  // median of winning-C fold thresholds
  std::vector<double> best_c_fold_thresholds;
};

// Index of the winning grid entry: highest mean accuracy, ties by higher
// mean macro-F1, then by smaller C. Exposed for direct testing.
std::size_t select_best(const std::vector<CSummary>& summaries);

// Median with the even-count convention: mean of the middle two.
double median(std::vector<double> values);

struct GridSearchResult {
  double c_star = 0.0;
  double tau_star = 0.0;
  CvReport report;
};

// K-fold grid search over cfg.c_grid. Standardizer and model are refitted
// inside every fold; validation rows never touch the fit.
GridSearchResult grid_search(const Matrix& X, const std::vector<int>& y,
                             const TrainConfig& cfg);

struct TrainMeta {
  std::uint64_t seed = 0;
  int k_folds = 0;
  std::vector<double> c_grid;
  std::string backend_tag;
  std::string created_at;  // informational; excluded from byte-stability
};

struct ArbiterModel {
  std::string schema_version;
  std::vector<std::string> feature_names;  // columns, in order
  double eps_div = 1e-6;
  Standardizer standardizer;
  std::vector<double> weights;
  double bias = 0.0;
  double c_reg = 1.0;
  double threshold = 0.5;
  std::vector<double> fold_thresholds;
  TrainMeta meta;
};

// Refit on all rows at C = c_star and attach tau_star plus diagnostics.
ArbiterModel finalize(const Matrix& X, const std::vector<int>& y,
                      double c_star, double tau_star,
                      const FeatureSchema& schema,
                      const std::vector<std::string>& feature_names,
                      const TrainConfig& cfg, const CvReport& report);

// Column-select phi by the model's feature names, standardize, score.
double predict_proba(const ArbiterModel& model, const FeatureVector& phi,
                     const FeatureSchema& schema);
Prediction predict(const ArbiterModel& model, const FeatureVector& phi,
                   const FeatureSchema& schema);

nlohmann::json model_to_json(const ArbiterModel& model);
ArbiterModel model_from_json(const nlohmann::json& j);
void save_model(const ArbiterModel& model, const std::string& path);
ArbiterModel load_model(const std::string& path);

nlohmann::json cv_report_to_json(const CvReport& report);

}  // namespace wmsar
