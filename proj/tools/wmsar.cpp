#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wmsar/pipeline.hpp"

namespace {

struct CliOptions {
  std::string config_path;
  std::string corpus_path;
  std::string backend_mode;
  std::string out_dir;
  std::string utterance;
  std::vector<std::string> ablations;
  std::uint64_t seed = 0;
  bool seed_set = false;
  double epsilon = 0.0;
  bool epsilon_set = false;
  int k_folds = 0;
  bool k_folds_set = false;
};

wmsar::RunConfig resolve_config(const CliOptions& opt) {
  wmsar::RunConfig cfg;
  if (!opt.config_path.empty()) cfg = wmsar::load_run_config(opt.config_path);
  if (!opt.corpus_path.empty()) cfg.corpus.path = opt.corpus_path;
  if (!opt.backend_mode.empty()) cfg.backend_mode = opt.backend_mode;
  if (!opt.out_dir.empty()) cfg.out_dir = opt.out_dir;
  if (opt.seed_set) {
    cfg.split.seed = opt.seed;
    cfg.train.seed = opt.seed;
  }
  if (opt.epsilon_set) cfg.sign_epsilon = opt.epsilon;
  if (opt.k_folds_set) cfg.train.k_folds = opt.k_folds;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"world-model sarcasm signal extraction and arbitration"};
  app.require_subcommand(1);

  CliOptions opt;
  app.add_option("--config", opt.config_path, "JSON config file");
  app.add_option("--corpus", opt.corpus_path, "corpus file (overrides config)");
  app.add_option("--backend", opt.backend_mode, "backend mode")
      ->check(CLI::IsMember({"mock", "live"}));
  app.add_option("--out", opt.out_dir, "output directory");
  app.add_option("--seed", opt.seed, "split/train seed")
      ->each([&opt](const std::string&) { opt.seed_set = true; });
  app.add_option("--epsilon", opt.epsilon, "neutral band half-width")
      ->each([&opt](const std::string&) { opt.epsilon_set = true; });
  app.add_option("--k-folds", opt.k_folds, "cross-validation folds")
      ->each([&opt](const std::string&) { opt.k_folds_set = true; });

  auto* extract = app.add_subcommand("extract", "run agents over the corpus");
  auto* train = app.add_subcommand("train", "grid-search and fit the arbiter");
  auto* eval = app.add_subcommand("eval", "score the held-out test split");
  auto* ablate = app.add_subcommand("ablate", "train feature-group ablations");
  auto* explain = app.add_subcommand("explain", "rank model coefficients");
  auto* trace = app.add_subcommand("trace", "audit one utterance end to end");
  // Let `wmsar extract --corpus ...` work: options the subcommand does not
  // own are resolved against the top-level app.
  for (auto* sub : {extract, train, eval, ablate, explain, trace})
    sub->fallthrough();

  ablate
      ->add_option("--configs", opt.ablations,
                   "subset of: full no_d no_t no_s no_interaction")
      ->delimiter(',');
  trace->add_option("--utterance", opt.utterance, "utterance text")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    const wmsar::RunConfig cfg = resolve_config(opt);
    wmsar::CommandResult result;
    if (extract->parsed()) {
      result = wmsar::cmd_extract(cfg);
    } else if (train->parsed()) {
      result = wmsar::cmd_train(cfg);
    } else if (eval->parsed()) {
      result = wmsar::cmd_eval(cfg);
    } else if (ablate->parsed()) {
      std::vector<wmsar::AblationConfig> configs;
      if (opt.ablations.empty()) {
        configs = wmsar::all_ablation_configs();
      } else {
        for (const auto& name : opt.ablations) {
          const auto c = wmsar::ablation_from_name(name);
          if (!c) {
            std::cerr << "error: unknown ablation config '" << name << "'\n";
            return 2;
          }
          configs.push_back(*c);
        }
      }
      result = wmsar::cmd_ablate(cfg, configs);
    } else if (explain->parsed()) {
      result = wmsar::cmd_explain(cfg);
    } else if (trace->parsed()) {
      result = wmsar::cmd_trace(cfg, opt.utterance);
    }
    std::cout << result.report.dump(2) << "\n";
    return result.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
