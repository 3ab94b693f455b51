#include "wmsar/explain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace wmsar {

namespace {

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string opt_fmt(const std::optional<double>& v) {
  return v ? fmt("%.3f", *v) : std::string("-");
}

}  // namespace

MissingSignalsError::MissingSignalsError(std::vector<std::string> ids)
    : std::runtime_error("missing cached signals for " +
                         std::to_string(ids.size()) + " utterance(s)"),
      missing_ids(std::move(ids)) {}

WeightReport explain_weights(const ArbiterModel& model, int top_k) {
  WeightReport report;
  report.intercept = model.bias;
  report.top_k = top_k;
  report.ranked.reserve(model.weights.size());
  for (std::size_t i = 0; i < model.weights.size(); ++i)
    report.ranked.push_back({model.feature_names[i], model.weights[i]});
  std::stable_sort(report.ranked.begin(), report.ranked.end(),
                   [](const WeightEntry& a, const WeightEntry& b) {
                     return std::abs(a.coefficient) > std::abs(b.coefficient);
                   });
  return report;
}

SignalStats signal_stats(const std::vector<SignalRecord>& records,
                         const std::vector<int>& y_hat,
                         const std::vector<int>& y, std::string scope) {
  if (records.size() != y_hat.size() || records.size() != y.size())
    throw std::invalid_argument("signal_stats: mismatched input lengths");
  SignalStats stats;
  stats.scope = std::move(scope);

  struct Acc {
    double t = 0, d = 0, s = 0;
    std::int64_t n = 0;
  } acc_correct, acc_wrong;

  for (std::size_t i = 0; i < records.size(); ++i) {
    Acc& a = y_hat[i] == y[i] ? acc_correct : acc_wrong;
    a.t += records[i].intent.t_sar;
    a.d += records[i].inconsistency.abs_d;
    a.s += static_cast<double>(records[i].inconsistency.sd);
    a.n++;
  }
  auto fill = [](const Acc& a) {
    GroupStats g;
    g.n = a.n;
    if (a.n > 0) {
      const double n = static_cast<double>(a.n);
      g.mean_t_sar = a.t / n;
      g.mean_abs_d = a.d / n;
      g.sd_rate = a.s / n;
    }
    return g;
  };
  stats.correct = fill(acc_correct);
  stats.wrong = fill(acc_wrong);
  return stats;
}

DecisionTrace trace_decision(const Utterance& u, const SignalRecord& record,
                             const ArbiterModel& model,
                             const FeatureSchema& schema) {
  DecisionTrace t;
  t.utterance_text = u.text;
  t.record = record;
  t.features = build_features(record.inconsistency.abs_d, record.intent.t_sar,
                              record.inconsistency.sd, schema);

  const std::vector<double> selected =
      select_features(t.features, schema, model.feature_names);
  const std::vector<double> standardized = model.standardizer.apply(selected);

  t.intercept = model.bias;
  t.score = model.bias;
  t.contributions.reserve(selected.size());
  for (std::size_t i = 0; i < selected.size(); ++i) {
    TraceContribution c;
    c.name = model.feature_names[i];
    c.raw = selected[i];
    c.standardized = standardized[i];
    c.weight = model.weights[i];
    c.contribution = model.weights[i] * standardized[i];
    t.score += c.contribution;
    t.contributions.push_back(c);
  }
  std::stable_sort(t.contributions.begin(), t.contributions.end(),
                   [](const TraceContribution& a, const TraceContribution& b) {
                     return std::abs(a.contribution) > std::abs(b.contribution);
                   });
  t.probability = sigmoid(t.score);
  t.threshold = model.threshold;
  t.label = t.probability >= t.threshold ? 1 : 0;
  return t;
}

std::vector<AblationResult> run_ablation(
    const std::vector<LabeledExample>& examples,
    const std::unordered_map<std::string, SignalRecord>& records,
    const std::vector<AblationConfig>& configs, const TrainConfig& train_cfg,
    const FeatureSchema& schema) {
  std::vector<std::string> missing;
  for (const auto& ex : examples) {
    if (records.find(ex.utterance.id) == records.end())
      missing.push_back(ex.utterance.id);
  }
  if (!missing.empty()) throw MissingSignalsError(std::move(missing));

  Matrix full_trainval, full_test;
  std::vector<int> y_trainval, y_test;
  for (const auto& ex : examples) {
    const SignalRecord& r = records.at(ex.utterance.id);
    FeatureVector phi = build_features(r.inconsistency.abs_d, r.intent.t_sar,
                                       r.inconsistency.sd, schema);
    if (ex.split == Split::Test) {
      full_test.push_back(std::move(phi.values));
      y_test.push_back(ex.label);
    } else {
      full_trainval.push_back(std::move(phi.values));
      y_trainval.push_back(ex.label);
    }
  }
  if (full_trainval.empty() || full_test.empty())
    throw std::invalid_argument("run_ablation: need both train+val and test rows");

  auto columns_for = [&](const std::vector<std::string>& mask) {
    std::vector<std::size_t> cols;
    for (const auto& name : mask) {
      const auto it =
          std::find(schema.names.begin(), schema.names.end(), name);
      cols.push_back(
          static_cast<std::size_t>(it - schema.names.begin()));
    }
    return cols;
  };
  auto take = [](const Matrix& X, const std::vector<std::size_t>& cols) {
    Matrix out;
    out.reserve(X.size());
    for (const auto& row : X) {
      std::vector<double> r;
      r.reserve(cols.size());
      for (std::size_t c : cols) r.push_back(row[c]);
      out.push_back(std::move(r));
    }
    return out;
  };

  std::vector<AblationResult> results;
  for (AblationConfig config : configs) {
    const std::vector<std::string> mask = ablation_mask(schema, config);
    const auto cols = columns_for(mask);
    const Matrix x_trainval = take(full_trainval, cols);
    const Matrix x_test = take(full_test, cols);

    const GridSearchResult gs = grid_search(x_trainval, y_trainval, train_cfg);
    const ArbiterModel model =
        finalize(x_trainval, y_trainval, gs.c_star, gs.tau_star, schema, mask,
                 train_cfg, gs.report);

    std::vector<int> pred;
    pred.reserve(x_test.size());
    for (const auto& row : x_test) {
      const double p = predict_proba_row(model.weights, model.bias,
                                         model.standardizer.apply(row));
      pred.push_back(p >= model.threshold ? 1 : 0);
    }

    AblationResult res;
    res.config = config;
    res.feature_names = mask;
    res.c_star = gs.c_star;
    res.tau_star = gs.tau_star;
    res.test_report = evaluate(pred, y_test);
    results.push_back(std::move(res));
  }
  return results;
}

std::string render_weight_table(const WeightReport& report) {
  std::ostringstream out;
  out << "rank  feature        coefficient\n";
  const int limit = std::min<int>(report.top_k,
                                  static_cast<int>(report.ranked.size()));
  for (int i = 0; i < limit; ++i) {
    char line[96];
    std::snprintf(line, sizeof line, "%4d  %-13s %+.4f\n", i + 1,
                  report.ranked[static_cast<std::size_t>(i)].name.c_str(),
                  report.ranked[static_cast<std::size_t>(i)].coefficient);
    out << line;
  }
  out << "intercept: " << fmt("%+.4f", report.intercept) << "\n";
  return out.str();
}

std::string render_signal_stats(const SignalStats& stats) {
  std::ostringstream out;
  out << "scope: " << stats.scope << "\n";
  out << "group    n      mean_t_sar  mean_abs_d  sd_rate\n";
  auto row = [&](const char* name, const GroupStats& g) {
    char line[96];
    std::snprintf(line, sizeof line, "%-8s %-6lld %-11s %-11s %s\n", name,
                  static_cast<long long>(g.n), opt_fmt(g.mean_t_sar).c_str(),
                  opt_fmt(g.mean_abs_d).c_str(), opt_fmt(g.sd_rate).c_str());
    out << line;
  };
  row("correct", stats.correct);
  row("wrong", stats.wrong);
  return out.str();
}

std::string render_eval_row(const std::string& scope, const EvalReport& r) {
  std::ostringstream out;
  out << scope << "  acc=" << fmt("%.3f", r.accuracy)
      << "  macro_f1=" << fmt("%.3f", r.macro_f1) << "  n=" << r.n << "\n";
  return out.str();
}

std::string render_ablation_table(const std::vector<AblationResult>& results) {
  std::ostringstream out;
  out << "config          features  accuracy  macro_f1\n";
  for (const auto& r : results) {
    char line[96];
    std::snprintf(line, sizeof line, "%-15s %-9zu %-9s %s\n",
                  ablation_name(r.config), r.feature_names.size(),
                  fmt("%.3f", r.test_report.accuracy).c_str(),
                  fmt("%.3f", r.test_report.macro_f1).c_str());
    out << line;
  }
  return out.str();
}

std::string render_trace(const DecisionTrace& t) {
  std::ostringstream out;
  out << "utterance: " << t.utterance_text << "\n";
  out << "literal m=" << fmt("%.3f", t.record.literal.m_literal)
      << "  norm e=" << fmt("%.3f", t.record.norm.e_norm)
      << "  intent t=" << fmt("%.3f", t.record.intent.t_sar) << "\n";
  out << "context: actor_relation=" << t.record.context.actor_relation
      << " | scene=" << t.record.context.scene
      << " | prior_event=" << t.record.context.prior_event << "\n";
  out << "inconsistency: d=" << fmt("%.3f", t.record.inconsistency.d)
      << "  |d|=" << fmt("%.3f", t.record.inconsistency.abs_d)
      << "  sign_flip=" << t.record.inconsistency.sd << "\n";
  if (t.record.is_degraded()) {
    out << "degraded stages:";
    for (const auto& s : t.record.degraded) out << " " << s;
    out << "\n";
  }
  out << "top contributions (weight * standardized value):\n";
  const std::size_t limit = std::min<std::size_t>(5, t.contributions.size());
  for (std::size_t i = 0; i < limit; ++i) {
    const TraceContribution& c = t.contributions[i];
    char line[128];
    std::snprintf(line, sizeof line,
                  "  %-13s raw=%+.4f std=%+.4f w=%+.4f -> %+.4f\n",
                  c.name.c_str(), c.raw, c.standardized, c.weight,
                  c.contribution);
    out << line;
  }
  out << "score=" << fmt("%+.4f", t.score)
      << "  probability=" << fmt("%.4f", t.probability)
      << "  threshold=" << fmt("%.4f", t.threshold) << "  label=" << t.label
      << "\n";
  return out.str();
}

nlohmann::json weight_report_to_json(const WeightReport& r) {
  nlohmann::json ranked = nlohmann::json::array();
  for (const auto& e : r.ranked)
    ranked.push_back({{"name", e.name}, {"coefficient", e.coefficient}});
  return nlohmann::json{
      {"ranked", ranked}, {"intercept", r.intercept}, {"top_k", r.top_k}};
}

nlohmann::json signal_stats_to_json(const SignalStats& s) {
  auto group = [](const GroupStats& g) {
    nlohmann::json j{{"n", g.n}};
    j["mean_t_sar"] = g.mean_t_sar ? nlohmann::json(*g.mean_t_sar)
                                   : nlohmann::json(nullptr);
    j["mean_abs_d"] = g.mean_abs_d ? nlohmann::json(*g.mean_abs_d)
                                   : nlohmann::json(nullptr);
    j["sd_rate"] =
        g.sd_rate ? nlohmann::json(*g.sd_rate) : nlohmann::json(nullptr);
    return j;
  };
  return nlohmann::json{{"scope", s.scope},
                        {"correct", group(s.correct)},
                        {"wrong", group(s.wrong)}};
}

nlohmann::json trace_to_json(const DecisionTrace& t) {
  nlohmann::json contributions = nlohmann::json::array();
  for (const auto& c : t.contributions) {
    contributions.push_back({{"name", c.name},
                             {"raw", c.raw},
                             {"standardized", c.standardized},
                             {"weight", c.weight},
                             {"contribution", c.contribution}});
  }
  return nlohmann::json{{"utterance", t.utterance_text},
                        {"record", t.record},
                        {"contributions", contributions},
                        {"intercept", t.intercept},
                        {"score", t.score},
                        {"probability", t.probability},
                        {"threshold", t.threshold},
                        {"label", t.label}};
}

nlohmann::json ablation_to_json(const std::vector<AblationResult>& results) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : results) {
    arr.push_back({{"config", ablation_name(r.config)},
                   {"feature_names", r.feature_names},
                   {"c", r.c_star},
                   {"threshold", r.tau_star},
                   {"test", eval_report_to_json(r.test_report)}});
  }
  return arr;
}

}  // namespace wmsar
