#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "wmsar/agents.hpp"
#include "wmsar/arbiter.hpp"
#include "wmsar/data_io.hpp"
#include "wmsar/explain.hpp"

namespace wmsar {

struct RunConfig {
  CorpusSpec corpus;
  SplitSpec split;
  std::string backend_mode = "mock";  // "mock" or "live"
  BackendConfig backend;
  std::string prompts_dir = "prompts/v1";
  std::string lexicon_dir = "fixtures/lexicons";
  double sign_epsilon = 0.05;
  double feature_eps_div = 1e-6;
  TrainConfig train;
  std::string out_dir = "out";
  double max_degraded_fraction = 0.0;
};

// Substitute ${VAR} with the environment value; unset variables raise
// std::runtime_error naming the variable.
std::string interpolate_env(const std::string& text);

RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);

struct CommandResult {
  int exit_code = 0;
  nlohmann::json report;
};

// Subcommand entry points. Artifacts land under cfg.out_dir:
//   split_manifest.json, cache.jsonl, extraction_report.json,
//   model.json, cv_report.json, eval_report.json, ablation_report.json,
//   weights.json, trace.json plus rendered .txt tables.
CommandResult cmd_extract(const RunConfig& cfg);
CommandResult cmd_train(const RunConfig& cfg);
CommandResult cmd_eval(const RunConfig& cfg);
CommandResult cmd_ablate(const RunConfig& cfg,
                         const std::vector<AblationConfig>& configs);
CommandResult cmd_explain(const RunConfig& cfg);
CommandResult cmd_trace(const RunConfig& cfg, const std::string& utterance);

}  // namespace wmsar
