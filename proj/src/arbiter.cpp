#include "wmsar/arbiter.hpp"

#include "wmsar/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace wmsar {

namespace {

void check_matrix(const Matrix& X, const char* where) {
  if (X.empty()) throw TrainError(std::string(where) + ": empty matrix");
  const std::size_t p = X.front().size();
  if (p == 0) throw TrainError(std::string(where) + ": zero-width matrix");
  for (const auto& row : X) {
    if (row.size() != p)
      throw TrainError(std::string(where) + ": ragged matrix");
  }
}

void check_labels(const std::vector<int>& y, std::size_t n,
                  const char* where) {
  if (y.size() != n)
    throw TrainError(std::string(where) + ": label count mismatch");
  for (int v : y) {
    if (v != 0 && v != 1)
      throw TrainError(std::string(where) + ": labels must be 0/1");
  }
}

double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

// Dense Cholesky in place; returns false if the matrix is not positive
// definite. Lower triangle of a holds L afterwards.
bool cholesky(std::vector<double>& a, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    double diag = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) diag -= a[j * n + k] * a[j * n + k];
    if (!(diag > 0.0) || !std::isfinite(diag)) return false;
    const double ljj = std::sqrt(diag);
    a[j * n + j] = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) v -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = v / ljj;
    }
  }
  return true;
}

// Solve L L^T x = b with L from cholesky().
std::vector<double> cholesky_solve(const std::vector<double>& L, std::size_t n,
                                   std::vector<double> b) {
  for (std::size_t i = 0; i < n; ++i) {
    double v = b[i];
    for (std::size_t k = 0; k < i; ++k) v -= L[i * n + k] * b[k];
    b[i] = v / L[i * n + i];
  }
  for (std::size_t ii = n; ii-- > 0;) {
    double v = b[ii];
    for (std::size_t k = ii + 1; k < n; ++k) v -= L[k * n + ii] * b[k];
    b[ii] = v / L[ii * n + ii];
  }
  return b;
}

struct Objective {
  const Matrix& X;
  const std::vector<int>& y;
  double C;
  const std::array<double, 2>& cw;

  // theta = [w..., b]
  double value(const std::vector<double>& theta) const {
    const std::size_t p = X.front().size();
    double loss = 0.0;
    for (std::size_t i = 0; i < X.size(); ++i) {
      double z = theta[p];
      for (std::size_t j = 0; j < p; ++j) z += theta[j] * X[i][j];
      loss += cw[static_cast<std::size_t>(y[i])] *
              (softplus(z) - static_cast<double>(y[i]) * z);
    }
    double reg = 0.0;
    for (std::size_t j = 0; j < p; ++j) reg += theta[j] * theta[j];
    return loss + reg / (2.0 * C);
  }

  void gradient(const std::vector<double>& theta, std::vector<double>& g,
                std::vector<double>& probs) const {
    const std::size_t p = X.front().size();
    std::fill(g.begin(), g.end(), 0.0);
    for (std::size_t i = 0; i < X.size(); ++i) {
      double z = theta[p];
      for (std::size_t j = 0; j < p; ++j) z += theta[j] * X[i][j];
      const double pi = sigmoid(z);
      probs[i] = pi;
      const double r =
          cw[static_cast<std::size_t>(y[i])] * (pi - static_cast<double>(y[i]));
      for (std::size_t j = 0; j < p; ++j) g[j] += r * X[i][j];
      g[p] += r;
    }
    for (std::size_t j = 0; j < p; ++j) g[j] += theta[j] / C;
  }

  // H = X^T diag(cw * p(1-p)) X + (1/C) I on the weight block; bias row and
  // column carry no penalty.
  void hessian(const std::vector<double>& probs, std::vector<double>& H) const {
    const std::size_t p = X.front().size();
    const std::size_t d = p + 1;
    std::fill(H.begin(), H.end(), 0.0);
    for (std::size_t i = 0; i < X.size(); ++i) {
      const double pi = probs[i];
      const double di = cw[static_cast<std::size_t>(y[i])] * pi * (1.0 - pi);
      if (di == 0.0) continue;
      for (std::size_t a = 0; a < p; ++a) {
        const double da = di * X[i][a];
        for (std::size_t b = a; b < p; ++b) H[a * d + b] += da * X[i][b];
        H[a * d + p] += da;
      }
      H[p * d + p] += di;
    }
    for (std::size_t j = 0; j < p; ++j) H[j * d + j] += 1.0 / C;
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < a; ++b) H[a * d + b] = H[b * d + a];
  }
};

std::string now_iso8601() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double ez = std::exp(z);
  return ez / (1.0 + ez);
}

std::vector<double> Standardizer::apply(const std::vector<double>& x) const {
  if (x.size() != means.size())
    throw TrainError("standardizer: arity mismatch");
  std::vector<double> out(x.size());
  for (std::size_t j = 0; j < x.size(); ++j)
    out[j] = (x[j] - means[j]) / scales[j];
  return out;
}

Matrix Standardizer::apply(const Matrix& X) const {
  Matrix out;
  out.reserve(X.size());
  for (const auto& row : X) out.push_back(apply(row));
  return out;
}

Standardizer fit_standardizer(const Matrix& X) {
  check_matrix(X, "fit_standardizer");
  const std::size_t n = X.size();
  const std::size_t p = X.front().size();
  Standardizer s;
  s.means.assign(p, 0.0);
  s.scales.assign(p, 1.0);
  for (std::size_t j = 0; j < p; ++j) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += X[i][j];
    const double mean = sum / static_cast<double>(n);
    double sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dlt = X[i][j] - mean;
      sq += dlt * dlt;
    }
    const double sd = std::sqrt(sq / static_cast<double>(n));
    s.means[j] = mean;
    // Constant columns (allowing float dust) keep unit scale so they pass
    // through centered instead of exploding.
    s.scales[j] = sd > 1e-12 * std::max(1.0, std::abs(mean)) ? sd : 1.0;
  }
  return s;
}

std::array<double, 2> class_weights(const std::vector<int>& y) {
  std::array<std::size_t, 2> counts = {0, 0};
  for (int v : y) {
    if (v != 0 && v != 1) throw TrainError("class_weights: labels must be 0/1");
    counts[static_cast<std::size_t>(v)]++;
  }
  if (counts[0] == 0 || counts[1] == 0)
    throw TrainError("class_weights: both classes must be present");
  const double n = static_cast<double>(y.size());
  return {n / (2.0 * static_cast<double>(counts[0])),
          n / (2.0 * static_cast<double>(counts[1]))};
}

LrSolution train_lr(const Matrix& Xstd, const std::vector<int>& y, double C,
                    const std::array<double, 2>& cw, const TrainConfig& cfg) {
  check_matrix(Xstd, "train_lr");
  check_labels(y, Xstd.size(), "train_lr");
  if (!(C > 0.0)) throw TrainError("train_lr: C must be positive");

  const std::size_t p = Xstd.front().size();
  const std::size_t d = p + 1;
  Objective obj{Xstd, y, C, cw};

  std::vector<double> theta(d, 0.0);
  std::vector<double> g(d, 0.0);
  std::vector<double> probs(Xstd.size(), 0.0);
  std::vector<double> H(d * d, 0.0);
  std::vector<double> chol(d * d, 0.0);

  double fval = obj.value(theta);
  int iter = 0;
  for (; iter < cfg.max_iterations; ++iter) {
    obj.gradient(theta, g, probs);
    double gmax = 0.0;
    for (double v : g) gmax = std::max(gmax, std::abs(v));
    if (gmax <= cfg.tolerance)
      return {std::vector<double>(theta.begin(), theta.begin() + p), theta[p],
              iter, gmax, true};

    obj.hessian(probs, H);
    std::vector<double> step;
    double mu = 0.0;
    for (int attempt = 0; attempt < 12; ++attempt) {
      chol = H;
      if (mu > 0.0)
        for (std::size_t j = 0; j < d; ++j) chol[j * d + j] += mu;
      if (cholesky(chol, d)) {
        std::vector<double> neg(g);
        for (double& v : neg) v = -v;
        step = cholesky_solve(chol, d, std::move(neg));
        break;
      }
      mu = mu == 0.0 ? 1e-8 : mu * 100.0;
    }
    if (step.empty()) throw TrainError("train_lr: hessian factorization failed");

    double slope = 0.0;
    for (std::size_t j = 0; j < d; ++j) slope += g[j] * step[j];
    if (!(slope < 0.0)) {
      // Damped direction lost descent; fall back to steepest descent.
      for (std::size_t j = 0; j < d; ++j) step[j] = -g[j];
      slope = 0.0;
      for (std::size_t j = 0; j < d; ++j) slope += g[j] * step[j];
    }

    std::vector<double> candidate(d);
    std::vector<double> gc(d, 0.0);
    std::vector<double> probs_c(Xstd.size(), 0.0);
    const auto candidate_gmax = [&] {
      obj.gradient(candidate, gc, probs_c);
      double m = 0.0;
      for (double v : gc) m = std::max(m, std::abs(v));
      return m;
    };

    double alpha = 1.0;
    bool moved = false;
    while (alpha >= 1e-12) {
      for (std::size_t j = 0; j < d; ++j)
        candidate[j] = theta[j] + alpha * step[j];
      const double fc = obj.value(candidate);
      if (std::isfinite(fc) && fc <= fval + 1e-4 * alpha * slope) {
        // Near the optimum the true decrease drops below the rounding
        // granularity of the objective and fc comes back equal to fval;
        // accepting such a step blindly makes no progress. Demand either a
        // certified objective decrease or a strictly smaller gradient.
        if (fc < fval || candidate_gmax() < gmax) {
          theta = candidate;
          fval = fc;
          moved = true;
          break;
        }
      }
      alpha *= 0.5;
    }
    if (!moved) {
      // Objective comparisons are exhausted by floating-point noise; take
      // the undamped step if it still contracts the gradient, which is
      // exactly what a Newton step does in this regime.
      candidate = theta;
      for (std::size_t j = 0; j < d; ++j) candidate[j] += step[j];
      if (candidate_gmax() <= 0.9 * gmax) {
        theta = candidate;
        fval = obj.value(theta);
        moved = true;
      }
    }
    if (!moved) {
      std::ostringstream msg;
      msg << "train_lr: line search stalled at iteration " << iter
          << " (C=" << C << ")";
      throw TrainError(msg.str());
    }
  }

  obj.gradient(theta, g, probs);
  double gmax = 0.0;
  for (double v : g) gmax = std::max(gmax, std::abs(v));
  if (gmax <= cfg.tolerance)
    return {std::vector<double>(theta.begin(), theta.begin() + p), theta[p],
            iter, gmax, true};
  std::ostringstream msg;
  msg << "train_lr: no convergence after " << cfg.max_iterations
      << " iterations (C=" << C << ", gradient max-norm=" << gmax << ")";
  throw TrainError(msg.str());
}

double lr_objective(const Matrix& Xstd, const std::vector<int>& y, double C,
                    const std::array<double, 2>& cw,
                    const std::vector<double>& theta) {
  check_matrix(Xstd, "lr_objective");
  check_labels(y, Xstd.size(), "lr_objective");
  if (theta.size() != Xstd.front().size() + 1)
    throw TrainError("lr_objective: theta arity mismatch");
  const Objective obj{Xstd, y, C, cw};
  return obj.value(theta);
}

std::vector<double> lr_gradient(const Matrix& Xstd, const std::vector<int>& y,
                                double C, const std::array<double, 2>& cw,
                                const std::vector<double>& theta) {
  check_matrix(Xstd, "lr_gradient");
  check_labels(y, Xstd.size(), "lr_gradient");
  if (theta.size() != Xstd.front().size() + 1)
    throw TrainError("lr_gradient: theta arity mismatch");
  const Objective obj{Xstd, y, C, cw};
  std::vector<double> g(theta.size(), 0.0);
  std::vector<double> probs(Xstd.size(), 0.0);
  obj.gradient(theta, g, probs);
  return g;
}

double predict_proba_row(const std::vector<double>& weights, double bias,
                         const std::vector<double>& xstd) {
  if (weights.size() != xstd.size())
    throw TrainError("predict_proba_row: arity mismatch");
  double z = bias;
  for (std::size_t j = 0; j < weights.size(); ++j) z += weights[j] * xstd[j];
  return sigmoid(z);
}

std::vector<std::vector<std::size_t>> stratified_kfold(
    const std::vector<int>& y, int k, std::uint64_t seed) {
  if (k < 2) throw TrainError("stratified_kfold: k must be at least 2");
  check_labels(y, y.size(), "stratified_kfold");
  if (y.size() < static_cast<std::size_t>(k))
    throw TrainError("stratified_kfold: fewer examples than folds");

  std::array<std::vector<std::size_t>, 2> by_class;
  for (std::size_t i = 0; i < y.size(); ++i)
    by_class[static_cast<std::size_t>(y[i])].push_back(i);
  for (const auto& cls : by_class) {
    if (!cls.empty() && cls.size() < static_cast<std::size_t>(k))
      throw TrainError("stratified_kfold: class smaller than fold count");
  }

  // Hand-rolled Fisher-Yates: std::shuffle output is not pinned across
  // standard libraries, and fold assignment must be reproducible.
  std::mt19937_64 rng(seed);
  auto shuffle_indices = [&rng](std::vector<std::size_t>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(rng() % i);
      std::swap(v[i - 1], v[j]);
    }
  };

  std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(k));
  for (auto& cls : by_class) {
    shuffle_indices(cls);
    for (std::size_t i = 0; i < cls.size(); ++i)
      folds[i % static_cast<std::size_t>(k)].push_back(cls[i]);
  }
  for (auto& fold : folds) std::sort(fold.begin(), fold.end());
  return folds;
}

double optimal_threshold(const std::vector<double>& probs,
                         const std::vector<int>& y) {
  if (probs.empty() || probs.size() != y.size())
    throw TrainError("optimal_threshold: empty or mismatched inputs");

  std::vector<double> uniq(probs);
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());

  std::vector<double> candidates;
  candidates.push_back(0.0);
  candidates.push_back(1.0);
  for (std::size_t i = 0; i + 1 < uniq.size(); ++i)
    candidates.push_back((uniq[i] + uniq[i + 1]) / 2.0);

  double best_tau = 0.0;
  double best_acc = -1.0;
  for (double tau : candidates) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      const int pred = probs[i] >= tau ? 1 : 0;
      if (pred == y[i]) ++hits;
    }
    const double acc =
        static_cast<double>(hits) / static_cast<double>(probs.size());
    bool better = acc > best_acc;
    if (acc == best_acc) {
      const double cur = std::abs(tau - 0.5);
      const double inc = std::abs(best_tau - 0.5);
      better = cur < inc || (cur == inc && tau < best_tau);
    }
    if (better) {
      best_acc = acc;
      best_tau = tau;
    }
  }
  return best_tau;
}

std::size_t select_best(const std::vector<CSummary>& summaries) {
  if (summaries.empty()) throw TrainError("select_best: empty summaries");
  std::size_t best = 0;
  for (std::size_t i = 1; i < summaries.size(); ++i) {
    const CSummary& cur = summaries[i];
    const CSummary& win = summaries[best];
    if (cur.mean_accuracy > win.mean_accuracy) {
      best = i;
    } else if (cur.mean_accuracy == win.mean_accuracy) {
      if (cur.mean_macro_f1 > win.mean_macro_f1 ||
          (cur.mean_macro_f1 == win.mean_macro_f1 && cur.c < win.c)) {
        best = i;
      }
    }
  }
  return best;
}

double median(std::vector<double> values) {
  if (values.empty()) throw TrainError("median: empty input");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

GridSearchResult grid_search(const Matrix& X, const std::vector<int>& y,
                             const TrainConfig& cfg) {
  check_matrix(X, "grid_search");
  check_labels(y, X.size(), "grid_search");
  if (cfg.c_grid.empty()) throw TrainError("grid_search: empty C grid");

  const auto folds = stratified_kfold(y, cfg.k_folds, cfg.seed);

  GridSearchResult result;
  result.report.folds.reserve(cfg.c_grid.size() * folds.size());

  std::vector<std::vector<double>> thresholds_by_c;
  for (double c : cfg.c_grid) {
    std::vector<double> fold_thresholds;
    double acc_sum = 0.0;
    double f1_sum = 0.0;
    for (std::size_t f = 0; f < folds.size(); ++f) {
      std::vector<char> in_val(X.size(), 0);
      for (std::size_t idx : folds[f]) in_val[idx] = 1;

      Matrix x_train;
      std::vector<int> y_train;
      for (std::size_t i = 0; i < X.size(); ++i) {
        if (!in_val[i]) {
          x_train.push_back(X[i]);
          y_train.push_back(y[i]);
        }
      }

      // Refit the scaler inside the fold so validation rows never leak
      // into the fit.
      const Standardizer scaler = fit_standardizer(x_train);
      const auto cw = class_weights(y_train);
      const LrSolution sol = train_lr(scaler.apply(x_train), y_train, c, cw, cfg);

      std::vector<double> val_probs;
      std::vector<int> y_val;
      val_probs.reserve(folds[f].size());
      for (std::size_t idx : folds[f]) {
        val_probs.push_back(
            predict_proba_row(sol.weights, sol.bias, scaler.apply(X[idx])));
        y_val.push_back(y[idx]);
      }

      const double tau = optimal_threshold(val_probs, y_val);
      auto labels_at = [&val_probs](double t) {
        std::vector<int> out(val_probs.size());
        for (std::size_t i = 0; i < val_probs.size(); ++i)
          out[i] = val_probs[i] >= t ? 1 : 0;
        return out;
      };
      const auto pred_opt = labels_at(tau);
      const auto pred_half = labels_at(0.5);

      FoldResult fr;
      fr.c = c;
      fr.fold = static_cast<int>(f);
      fr.threshold = tau;
      fr.accuracy = accuracy(pred_opt, y_val);
      fr.macro_f1 = macro_f1(pred_opt, y_val);
      fr.accuracy_at_half = accuracy(pred_half, y_val);
      fr.macro_f1_at_half = macro_f1(pred_half, y_val);
      result.report.folds.push_back(fr);

      fold_thresholds.push_back(tau);
      acc_sum += fr.accuracy;
      f1_sum += fr.macro_f1;
    }
    CSummary summary;
    summary.c = c;
    summary.mean_accuracy = acc_sum / static_cast<double>(folds.size());
    summary.mean_macro_f1 = f1_sum / static_cast<double>(folds.size());
    result.report.c_summaries.push_back(summary);
    thresholds_by_c.push_back(std::move(fold_thresholds));
  }

  const std::size_t best = select_best(result.report.c_summaries);
  result.c_star = result.report.c_summaries[best].c;
  result.tau_star = median(thresholds_by_c[best]);
  result.report.best_c = result.c_star;
  result.report.best_threshold = result.tau_star;
  result.report.best_c_fold_thresholds = thresholds_by_c[best];
  return result;
}

ArbiterModel finalize(const Matrix& X, const std::vector<int>& y,
                      double c_star, double tau_star,
                      const FeatureSchema& schema,
                      const std::vector<std::string>& feature_names,
                      const TrainConfig& cfg, const CvReport& report) {
  check_matrix(X, "finalize");
  if (X.front().size() != feature_names.size())
    throw TrainError("finalize: feature name count does not match columns");

  ArbiterModel model;
  model.schema_version = schema.version;
  model.feature_names = feature_names;
  model.eps_div = schema.eps_div;
  model.standardizer = fit_standardizer(X);
  const auto cw = class_weights(y);
  const LrSolution sol =
      train_lr(model.standardizer.apply(X), y, c_star, cw, cfg);
  model.weights = sol.weights;
  model.bias = sol.bias;
  model.c_reg = c_star;
  model.threshold = tau_star;
  model.fold_thresholds = report.best_c_fold_thresholds;
  model.meta.seed = cfg.seed;
  model.meta.k_folds = cfg.k_folds;
  model.meta.c_grid = cfg.c_grid;
  model.meta.created_at = now_iso8601();
  return model;
}

double predict_proba(const ArbiterModel& model, const FeatureVector& phi,
                     const FeatureSchema& schema) {
  if (model.schema_version != schema.version)
    throw TrainError("predict_proba: model schema version mismatch");
  const std::vector<double> selected =
      select_features(phi, schema, model.feature_names);
  return predict_proba_row(model.weights, model.bias,
                           model.standardizer.apply(selected));
}

Prediction predict(const ArbiterModel& model, const FeatureVector& phi,
                   const FeatureSchema& schema) {
  return make_prediction(predict_proba(model, phi, schema), model.threshold);
}

nlohmann::json model_to_json(const ArbiterModel& model) {
  return nlohmann::json{
      {"schema_version", model.schema_version},
      {"feature_names", model.feature_names},
      {"eps_div", model.eps_div},
      {"standardizer",
       {{"means", model.standardizer.means},
        {"scales", model.standardizer.scales}}},
      {"weights", model.weights},
      {"bias", model.bias},
      {"c", model.c_reg},
      {"threshold", model.threshold},
      {"fold_thresholds", model.fold_thresholds},
      {"meta",
       {{"seed", model.meta.seed},
        {"k_folds", model.meta.k_folds},
        {"c_grid", model.meta.c_grid},
        {"backend_tag", model.meta.backend_tag},
        {"created_at", model.meta.created_at}}}};
}

ArbiterModel model_from_json(const nlohmann::json& j) {
  ArbiterModel model;
  model.schema_version = j.at("schema_version").get<std::string>();
  if (model.schema_version != kFeatureSchemaVersion)
    throw TrainError("model: unknown feature schema version '" +
                     model.schema_version + "'");
  j.at("feature_names").get_to(model.feature_names);
  model.eps_div = j.at("eps_div").get<double>();
  j.at("standardizer").at("means").get_to(model.standardizer.means);
  j.at("standardizer").at("scales").get_to(model.standardizer.scales);
  j.at("weights").get_to(model.weights);
  model.bias = j.at("bias").get<double>();
  model.c_reg = j.at("c").get<double>();
  model.threshold = j.at("threshold").get<double>();
  j.at("fold_thresholds").get_to(model.fold_thresholds);
  const auto& meta = j.at("meta");
  model.meta.seed = meta.at("seed").get<std::uint64_t>();
  model.meta.k_folds = meta.at("k_folds").get<int>();
  meta.at("c_grid").get_to(model.meta.c_grid);
  model.meta.backend_tag = meta.value("backend_tag", std::string());
  model.meta.created_at = meta.value("created_at", std::string());

  const std::size_t p = model.feature_names.size();
  if (model.weights.size() != p || model.standardizer.means.size() != p ||
      model.standardizer.scales.size() != p)
    throw TrainError("model: inconsistent arity between names and parameters");
  for (double s : model.standardizer.scales) {
    if (!(s > 0.0)) throw TrainError("model: non-positive standardizer scale");
  }
  return model;
}

void save_model(const ArbiterModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw TrainError("save_model: cannot open " + path);
  out << model_to_json(model).dump(2) << "\n";
}

ArbiterModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw TrainError("load_model: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw TrainError("load_model: invalid JSON in " + path + ": " + e.what());
  }
  return model_from_json(j);
}

nlohmann::json cv_report_to_json(const CvReport& report) {
  nlohmann::json folds = nlohmann::json::array();
  for (const auto& f : report.folds) {
    folds.push_back({{"c", f.c},
                     {"fold", f.fold},
                     {"threshold", f.threshold},
                     {"accuracy", f.accuracy},
                     {"macro_f1", f.macro_f1},
                     {"accuracy_at_half", f.accuracy_at_half},
                     {"macro_f1_at_half", f.macro_f1_at_half}});
  }
  nlohmann::json summaries = nlohmann::json::array();
  for (const auto& s : report.c_summaries) {
    summaries.push_back({{"c", s.c},
                         {"mean_accuracy", s.mean_accuracy},
                         {"mean_macro_f1", s.mean_macro_f1}});
  }
  return nlohmann::json{{"folds", folds},
                        {"c_summaries", summaries},
                        {"best_c", report.best_c},
                        {"best_threshold", report.best_threshold},
                        {"best_c_fold_thresholds", report.best_c_fold_thresholds}};
}

}  // namespace wmsar
