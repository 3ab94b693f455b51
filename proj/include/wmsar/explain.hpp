#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "wmsar/arbiter.hpp"
#include "wmsar/features.hpp"
#include "wmsar/metrics.hpp"
#include "wmsar/signal_model.hpp"

namespace wmsar {

struct WeightEntry {
  std::string name;
  double coefficient = 0.0;  // standardized-space weight
};

struct WeightReport {
  std::vector<WeightEntry> ranked;  // by |coefficient| descending
  double intercept = 0.0;
  int top_k = 10;
};

// Rank coefficients by absolute magnitude; ties keep schema order.
WeightReport explain_weights(const ArbiterModel& model, int top_k = 10);

struct GroupStats {
  std::int64_t n = 0;
  std::optional<double> mean_t_sar;
  std::optional<double> mean_abs_d;
  std::optional<double> sd_rate;
};

// Mean signal magnitudes for correctly vs incorrectly predicted examples.
struct SignalStats {
  std::string scope;  // corpus/config the stats were computed on
  GroupStats correct;
  GroupStats wrong;
};

SignalStats signal_stats(const std::vector<SignalRecord>& records,
                         const std::vector<int>& y_hat,
                         const std::vector<int>& y, std::string scope);

struct TraceContribution {
  std::string name;
  double raw = 0.0;
  double standardized = 0.0;
  double weight = 0.0;
  double contribution = 0.0;  // weight * standardized
};

// Full per-decision audit: every stage output plus the linear-model
// decomposition whose terms sum (with the intercept) to the score.
struct DecisionTrace {
  std::string utterance_text;
  SignalRecord record;
  FeatureVector features;
  std::vector<TraceContribution> contributions;  // |coefficient| descending
  double intercept = 0.0;
  double score = 0.0;  // pre-sigmoid
  double probability = 0.0;
  double threshold = 0.0;
  int label = 0;
};

DecisionTrace trace_decision(const Utterance& u, const SignalRecord& record,
                             const ArbiterModel& model,
                             const FeatureSchema& schema);

struct AblationResult {
  AblationConfig config = AblationConfig::Full;
  std::vector<std::string> feature_names;
  double c_star = 0.0;
  double tau_star = 0.0;
  EvalReport test_report;
};

struct MissingSignalsError : std::runtime_error {
  std::vector<std::string> missing_ids;
  explicit MissingSignalsError(std::vector<std::string> ids);
};

// Train + evaluate one model per ablation config on identical splits.
// Records are looked up by utterance id; any gap raises MissingSignalsError
// naming every absent id.
std::vector<AblationResult> run_ablation(
    const std::vector<LabeledExample>& examples,
    const std::unordered_map<std::string, SignalRecord>& records,
    const std::vector<AblationConfig>& configs, const TrainConfig& train_cfg,
    const FeatureSchema& schema);

std::string render_weight_table(const WeightReport& report);
std::string render_signal_stats(const SignalStats& stats);
std::string render_eval_row(const std::string& scope, const EvalReport& r);
std::string render_ablation_table(const std::vector<AblationResult>& results);
std::string render_trace(const DecisionTrace& t);

nlohmann::json weight_report_to_json(const WeightReport& r);
nlohmann::json signal_stats_to_json(const SignalStats& s);
nlohmann::json trace_to_json(const DecisionTrace& t);
nlohmann::json ablation_to_json(const std::vector<AblationResult>& results);

}  // namespace wmsar
