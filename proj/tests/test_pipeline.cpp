#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <json.hpp>

#include "wmsar/pipeline.hpp"

using namespace wmsar;
namespace fs = std::filesystem;

namespace {

const std::string kPromptsDir = std::string(WMSAR_SOURCE_DIR) + "/prompts/v1";
const std::string kLexiconDir =
    std::string(WMSAR_SOURCE_DIR) + "/fixtures/lexicons";

fs::path temp_dir(const std::string& stem) {
  return fs::path("/tmp") /
         ("wmsar_pipeline_" + std::to_string(::getpid()) + "_" + stem);
}

// A corpus where the ironic rows carry (a) positive surface words whose top-3
// token lands in the positive lexicon, flipping the mock norm negative, and
// (b) one sarcasm marker; the plain rows are valence-neutral and unmarked.
void write_smoke_corpus(const fs::path& path, int rows_per_class) {
  std::ofstream out(path);
  out << "text,label\n";
  for (int i = 0; i < rows_per_class; ++i) {
    const std::string a = "topic" + std::to_string(i);
    const std::string b = "note" + std::to_string(i);
    out << a << " " << a << " " << a << " " << a << " " << b << " " << b << " "
        << b << " great great totally,1\n";
    out << a << " " << a << " " << a << " " << a << " " << b << " " << b << " "
        << b << " plain,0\n";
  }
}

RunConfig smoke_config(const fs::path& dir) {
  RunConfig cfg;
  cfg.corpus.path = (dir / "corpus.csv").string();
  cfg.split.seed = 7;
  cfg.prompts_dir = kPromptsDir;
  cfg.lexicon_dir = kLexiconDir;
  cfg.out_dir = (dir / "out").string();
  cfg.train.seed = 7;
  return cfg;
}

}  // namespace

TEST_CASE("environment interpolation resolves nested references") {
  ::setenv("WMSAR_TEST_HOME", "/srv/data", 1);
  CHECK(interpolate_env("${WMSAR_TEST_HOME}/c.csv") == "/srv/data/c.csv");
  CHECK(interpolate_env("a${WMSAR_TEST_HOME}b${WMSAR_TEST_HOME}c") ==
        "a/srv/datab/srv/datac");
  CHECK(interpolate_env("no references") == "no references");
  CHECK(interpolate_env("") == "");

  ::unsetenv("WMSAR_TEST_MISSING");
  CHECK_THROWS_AS(static_cast<void>(interpolate_env("${WMSAR_TEST_MISSING}")),
                  std::runtime_error);
  CHECK_THROWS_AS(static_cast<void>(interpolate_env("${}")),
                  std::runtime_error);
  CHECK_THROWS_AS(static_cast<void>(interpolate_env("${UNTERMINATED")),
                  std::runtime_error);
  ::unsetenv("WMSAR_TEST_HOME");
}

TEST_CASE("run config parses defaults and explicit values") {
  const RunConfig defaults = parse_run_config(nlohmann::json::object());
  CHECK(defaults.backend_mode == "mock");
  CHECK(defaults.sign_epsilon == 0.05);
  CHECK(defaults.feature_eps_div == 1e-6);
  CHECK(defaults.train.k_folds == 5);
  CHECK(defaults.out_dir == "out");
  CHECK(defaults.max_degraded_fraction == 0.0);
  CHECK(defaults.split.ratios == std::array<double, 3>{0.8, 0.1, 0.1});

  ::setenv("WMSAR_TEST_ROOT", "/data", 1);
  const nlohmann::json j{
      {"corpus",
       {{"path", "${WMSAR_TEST_ROOT}/corpus.tsv"},
        {"format", "semeval_tab"},
        {"positive_label", "sarcastic"}}},
      {"split", {{"ratios", {0.7, 0.15, 0.15}}, {"seed", 42}}},
      {"backend_mode", "live"},
      {"backend", {{"model", "some-model"}, {"max_concurrent", 2}}},
      {"sign_epsilon", 0.1},
      {"train", {{"k_folds", 3}, {"c_grid", {0.5, 2.0}}}},
      {"out_dir", "/tmp/x"},
      {"max_degraded_fraction", 0.25}};
  const RunConfig cfg = parse_run_config(j);
  ::unsetenv("WMSAR_TEST_ROOT");
  CHECK(cfg.corpus.path == "/data/corpus.tsv");
  CHECK(cfg.corpus.format == CorpusFormat::SemevalTab);
  CHECK(cfg.corpus.positive_label == "sarcastic");
  CHECK(cfg.split.ratios == std::array<double, 3>{0.7, 0.15, 0.15});
  CHECK(cfg.split.seed == 42);
  CHECK(cfg.backend_mode == "live");
  CHECK(cfg.backend.model == "some-model");
  CHECK(cfg.backend.max_concurrent == 2);
  CHECK(cfg.sign_epsilon == 0.1);
  CHECK(cfg.train.k_folds == 3);
  CHECK(cfg.train.c_grid == std::vector<double>{0.5, 2.0});
  CHECK(cfg.out_dir == "/tmp/x");
  CHECK(cfg.max_degraded_fraction == 0.25);
}

TEST_CASE("run config rejects invalid settings") {
  CHECK_THROWS_AS(
      static_cast<void>(parse_run_config({{"backend_mode", "weird"}})),
      std::runtime_error);
  CHECK_THROWS_AS(static_cast<void>(parse_run_config(
                      {{"split", {{"ratios", {0.5, 0.5}}}}})),
                  std::runtime_error);
  CHECK_THROWS_AS(
      static_cast<void>(parse_run_config({{"sign_epsilon", 0.0}})),
      std::runtime_error);
  CHECK_THROWS_AS(
      static_cast<void>(parse_run_config({{"max_degraded_fraction", 1.5}})),
      std::runtime_error);
  CHECK_THROWS_AS(static_cast<void>(parse_run_config(
                      {{"corpus", {{"format", "parquet"}}}})),
                  std::runtime_error);
}

TEST_CASE("config files load from disk with interpolation applied") {
  const fs::path dir = temp_dir("cfg");
  fs::create_directories(dir);
  ::setenv("WMSAR_TEST_OUT", (dir / "runs").string().c_str(), 1);
  {
    std::ofstream out(dir / "run.json");
    out << R"({"corpus": {"path": "c.csv"}, "out_dir": "${WMSAR_TEST_OUT}"})";
  }
  const RunConfig cfg = load_run_config((dir / "run.json").string());
  CHECK(cfg.out_dir == (dir / "runs").string());
  CHECK(cfg.corpus.path == "c.csv");
  ::unsetenv("WMSAR_TEST_OUT");

  CHECK_THROWS_AS(static_cast<void>(load_run_config("/nonexistent/x.json")),
                  std::runtime_error);
  {
    std::ofstream out(dir / "bad.json");
    out << "{not json";
  }
  CHECK_THROWS_AS(
      static_cast<void>(load_run_config((dir / "bad.json").string())),
      std::runtime_error);
  fs::remove_all(dir);
}

TEST_CASE("mock pipeline runs extract, train, eval, ablate, explain, trace") {
  const fs::path dir = temp_dir("e2e");
  fs::remove_all(dir);
  fs::create_directories(dir);
  write_smoke_corpus(dir / "corpus.csv", 20);
  const RunConfig cfg = smoke_config(dir);
  const fs::path out = cfg.out_dir;

  // extract: signals for all 40 rows, no degradation, artifacts on disk
  const CommandResult extract = cmd_extract(cfg);
  CHECK(extract.exit_code == 0);
  CHECK(extract.report["total"] == 40);
  CHECK(extract.report["extracted"] == 40);
  CHECK(extract.report["from_cache"] == 0);
  CHECK(extract.report["degraded"] == 0);
  CHECK(extract.report["manifest_reused"] == false);
  CHECK(fs::exists(out / "split_manifest.json"));
  CHECK(fs::exists(out / "cache.jsonl"));
  CHECK(fs::exists(out / "extraction_report.json"));
  CHECK(fs::exists(out / "rejects.json"));

  // a second extract is served from the cache under the pinned split
  const CommandResult again = cmd_extract(cfg);
  CHECK(again.report["from_cache"] == 40);
  CHECK(again.report["extracted"] == 0);
  CHECK(again.report["manifest_reused"] == true);

  // train: fits on train+val and persists the model plus the search report
  const CommandResult train = cmd_train(cfg);
  CHECK(train.exit_code == 0);
  CHECK(train.report["train_val_rows"] == 36);
  const double best_c = train.report["best_c"].get<double>();
  CHECK(best_c > 0.0);
  CHECK(fs::exists(out / "model.json"));
  CHECK(fs::exists(out / "cv_report.json"));

  // eval: held-out accuracy; the constructed corpus is cleanly separable
  const CommandResult eval = cmd_eval(cfg);
  CHECK(eval.report["eval"]["n"] == 4);
  CHECK(eval.report["eval"]["accuracy"].get<double>() >= 0.9);
  const std::string scope = eval.report["scope"].get<std::string>();
  CHECK(scope.find("[test]") != std::string::npos);
  CHECK(fs::exists(out / "eval_report.json"));
  CHECK(fs::exists(out / "eval_table.txt"));

  // ablate: one retrained model per config on the same split
  const CommandResult ablate =
      cmd_ablate(cfg, {AblationConfig::Full, AblationConfig::NoT});
  REQUIRE(ablate.report.size() == 2);
  CHECK(ablate.report[0]["config"] == "full");
  CHECK(ablate.report[0]["test"]["accuracy"].get<double>() >= 0.9);
  CHECK(ablate.report[1]["config"] == "no_t");
  CHECK(fs::exists(out / "ablation_report.json"));
  CHECK(fs::exists(out / "ablation_table.txt"));

  // explain: coefficients ranked by magnitude
  const CommandResult explain = cmd_explain(cfg);
  const auto& ranked = explain.report["ranked"];
  REQUIRE(!ranked.empty());
  for (std::size_t i = 1; i < ranked.size(); ++i) {
    CHECK(std::abs(ranked[i - 1]["coefficient"].get<double>()) >=
          std::abs(ranked[i]["coefficient"].get<double>()) - 1e-12);
  }
  CHECK(fs::exists(out / "weights.json"));
  CHECK(fs::exists(out / "weights_table.txt"));

  // trace: full per-decision audit whose terms reproduce the score
  const CommandResult trace = cmd_trace(
      cfg, "topic99 topic99 topic99 topic99 note99 note99 note99 great great totally");
  const auto& t = trace.report;
  const double score = t["score"].get<double>();
  double sum = t["intercept"].get<double>();
  for (const auto& c : t["contributions"]) {
    sum += c["contribution"].get<double>();
  }
  CHECK(sum == doctest::Approx(score).epsilon(1e-9));
  const double prob = t["probability"].get<double>();
  CHECK(prob >= 0.0);
  CHECK(prob <= 1.0);
  CHECK(t["label"] == 1);  // the ironic family the model was trained on
  CHECK(fs::exists(out / "trace.json"));
  CHECK(fs::exists(out / "trace.txt"));

  // commands that need signals refuse to run against an empty cache
  RunConfig cold = cfg;
  cold.out_dir = (dir / "cold").string();
  fs::create_directories(cold.out_dir);
  CHECK_THROWS_AS(static_cast<void>(cmd_train(cold)), std::runtime_error);

  fs::remove_all(dir);
}
