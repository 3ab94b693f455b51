#include "wmsar/pipeline.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

#include "wmsar/backend.hpp"

namespace wmsar {

namespace fs = std::filesystem;

std::string interpolate_env(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t at = text.find("${", pos);
    if (at == std::string::npos) {
      out.append(text, pos, std::string::npos);
      break;
    }
    out.append(text, pos, at - pos);
    const std::size_t close = text.find('}', at + 2);
    if (close == std::string::npos)
      throw std::runtime_error("config: unterminated ${ in '" + text + "'");
    const std::string var = text.substr(at + 2, close - at - 2);
    if (var.empty())
      throw std::runtime_error("config: empty ${} reference");
    const char* value = std::getenv(var.c_str());
    if (value == nullptr)
      throw std::runtime_error("config: environment variable " + var +
                               " is not set");
    out.append(value);
    pos = close + 1;
  }
  return out;
}

namespace {

void interpolate_strings(nlohmann::json& j) {
  if (j.is_string()) {
    j = interpolate_env(j.get<std::string>());
  } else if (j.is_object() || j.is_array()) {
    for (auto& child : j) interpolate_strings(child);
  }
}

CorpusFormat format_from_name(const std::string& name) {
  if (name == "delimited") return CorpusFormat::DelimitedTwoColumn;
  if (name == "semeval_tab") return CorpusFormat::SemevalTab;
  throw std::runtime_error("config: unknown corpus format '" + name + "'");
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

}  // namespace

RunConfig parse_run_config(const nlohmann::json& raw) {
  nlohmann::json j = raw;
  interpolate_strings(j);

  RunConfig cfg;
  if (j.contains("corpus")) {
    const auto& c = j.at("corpus");
    cfg.corpus.path = c.value("path", std::string());
    cfg.corpus.format =
        format_from_name(c.value("format", std::string("delimited")));
    cfg.corpus.text_column = c.value("text_column", std::string("text"));
    cfg.corpus.label_column = c.value("label_column", std::string("label"));
    cfg.corpus.positive_label = c.value("positive_label", std::string("1"));
  }
  if (j.contains("split")) {
    const auto& s = j.at("split");
    if (s.contains("ratios")) {
      const auto r = s.at("ratios").get<std::vector<double>>();
      if (r.size() != 3)
        throw std::runtime_error("config: split.ratios needs 3 entries");
      cfg.split.ratios = {r[0], r[1], r[2]};
    }
    cfg.split.seed = s.value("seed", std::uint64_t{0});
    cfg.split.stratified = s.value("stratified", true);
  }
  cfg.backend_mode = j.value("backend_mode", std::string("mock"));
  if (cfg.backend_mode != "mock" && cfg.backend_mode != "live")
    throw std::runtime_error("config: backend_mode must be mock or live");
  if (j.contains("backend")) {
    const auto& b = j.at("backend");
    cfg.backend.endpoint = b.value("endpoint", cfg.backend.endpoint);
    cfg.backend.model = b.value("model", cfg.backend.model);
    cfg.backend.api_key_env = b.value("api_key_env", cfg.backend.api_key_env);
    cfg.backend.timeout_seconds =
        b.value("timeout_seconds", cfg.backend.timeout_seconds);
    cfg.backend.max_retries = b.value("max_retries", cfg.backend.max_retries);
    cfg.backend.backoff_base_seconds =
        b.value("backoff_base_seconds", cfg.backend.backoff_base_seconds);
    cfg.backend.max_concurrent =
        b.value("max_concurrent", cfg.backend.max_concurrent);
    cfg.backend.temperature = b.value("temperature", cfg.backend.temperature);
  }
  cfg.prompts_dir = j.value("prompts_dir", cfg.prompts_dir);
  cfg.lexicon_dir = j.value("lexicon_dir", cfg.lexicon_dir);
  cfg.sign_epsilon = j.value("sign_epsilon", cfg.sign_epsilon);
  cfg.feature_eps_div = j.value("feature_eps_div", cfg.feature_eps_div);
  if (j.contains("train")) {
    const auto& t = j.at("train");
    if (t.contains("c_grid"))
      cfg.train.c_grid = t.at("c_grid").get<std::vector<double>>();
    cfg.train.k_folds = t.value("k_folds", cfg.train.k_folds);
    cfg.train.seed = t.value("seed", cfg.train.seed);
    cfg.train.tolerance = t.value("tolerance", cfg.train.tolerance);
    cfg.train.max_iterations =
        t.value("max_iterations", cfg.train.max_iterations);
  }
  cfg.out_dir = j.value("out_dir", cfg.out_dir);
  cfg.max_degraded_fraction =
      j.value("max_degraded_fraction", cfg.max_degraded_fraction);
  if (cfg.max_degraded_fraction < 0.0 || cfg.max_degraded_fraction > 1.0)
    throw std::runtime_error("config: max_degraded_fraction must be in [0,1]");
  if (!(cfg.sign_epsilon > 0.0))
    throw std::runtime_error("config: sign_epsilon must be positive");
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("config " + path + " is not valid JSON: " +
                             e.what());
  }
  return parse_run_config(j);
}

namespace {

std::unique_ptr<ChatBackend> make_backend(const RunConfig& cfg) {
  if (cfg.backend_mode == "mock")
    return std::make_unique<MockChatBackend>(
        MockLexicons::load(cfg.lexicon_dir));
  return std::make_unique<HttpChatBackend>(cfg.backend);
}

struct LoadedCorpus {
  std::vector<LabeledExample> examples;
  std::vector<RejectedRow> rejects;
  std::vector<std::string> split_warnings;
  bool manifest_reused = false;
};

// Load the corpus and pin splits: an existing manifest wins so every
// command sees the same partition; otherwise assign and persist one.
LoadedCorpus load_examples(const RunConfig& cfg) {
  if (cfg.corpus.path.empty())
    throw std::runtime_error("config: corpus.path is required");
  LoadedCorpus out;
  CorpusLoad load = load_corpus(cfg.corpus);
  out.rejects = std::move(load.rejects);

  const fs::path manifest_path =
      fs::path(cfg.out_dir) / "split_manifest.json";
  if (fs::exists(manifest_path)) {
    const auto manifest = load_split_manifest(manifest_path.string());
    apply_split_manifest(load.examples, manifest);
    out.examples = std::move(load.examples);
    out.manifest_reused = true;
  } else {
    SplitResult split = assign_splits(std::move(load.examples), cfg.split);
    out.split_warnings = std::move(split.warnings);
    out.examples = std::move(split.examples);
    save_split_manifest(out.examples, manifest_path.string());
  }
  return out;
}

std::string backend_tag_for(const RunConfig& cfg) {
  const PromptLibrary prompts = PromptLibrary::load(cfg.prompts_dir);
  const std::string model =
      cfg.backend_mode == "mock" ? std::string("mock") : cfg.backend.model;
  return model + ":" + prompts.version();
}

struct RecordSet {
  std::vector<SignalRecord> records;  // aligned with examples
  std::unordered_map<std::string, SignalRecord> by_id;
  std::size_t degraded = 0;
};

// Pull every example's record out of the cache. The inconsistency block is
// recomputed under the active epsilon so a cache written with different
// settings still yields coherent signals.
RecordSet load_records(const RunConfig& cfg,
                       const std::vector<LabeledExample>& examples) {
  SignalCache cache((fs::path(cfg.out_dir) / "cache.jsonl").string());
  const std::string tag = backend_tag_for(cfg);
  const SignEpsilon eps{cfg.sign_epsilon};

  RecordSet out;
  std::vector<std::string> missing;
  for (const auto& ex : examples) {
    const auto hit = cache.get(cache_key(ex.utterance.text, tag));
    if (!hit) {
      missing.push_back(ex.utterance.id);
      continue;
    }
    SignalRecord rec = *hit;
    rec.inconsistency =
        make_inconsistency(rec.literal.m_literal, rec.norm.e_norm, eps);
    const auto violations = validate_record(rec, eps.epsilon);
    if (!violations.empty())
      throw std::runtime_error("cached record for " + ex.utterance.id +
                               " is invalid: " + violations[0]);
    if (rec.is_degraded()) out.degraded++;
    out.by_id.emplace(ex.utterance.id, rec);
    out.records.push_back(std::move(rec));
  }
  if (!missing.empty()) {
    std::ostringstream msg;
    msg << "no cached signals for " << missing.size()
        << " utterance(s); run extract first. Missing:";
    for (std::size_t i = 0; i < std::min<std::size_t>(missing.size(), 10); ++i)
      msg << " " << missing[i];
    if (missing.size() > 10) msg << " ...";
    throw std::runtime_error(msg.str());
  }
  return out;
}

Matrix features_for(const std::vector<LabeledExample>& examples,
                    const RecordSet& records, const FeatureSchema& schema,
                    Split wanted_a, Split wanted_b, std::vector<int>& y) {
  Matrix X;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (examples[i].split != wanted_a && examples[i].split != wanted_b)
      continue;
    const SignalRecord& r = records.records[i];
    FeatureVector phi = build_features(r.inconsistency.abs_d, r.intent.t_sar,
                                       r.inconsistency.sd, schema);
    X.push_back(std::move(phi.values));
    y.push_back(examples[i].label);
  }
  return X;
}

}  // namespace

CommandResult cmd_extract(const RunConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  LoadedCorpus corpus = load_examples(cfg);
  write_json(fs::path(cfg.out_dir) / "rejects.json",
             rejects_to_json(corpus.rejects));

  const PromptLibrary prompts = PromptLibrary::load(cfg.prompts_dir);
  const auto backend = make_backend(cfg);
  SignalCache cache((fs::path(cfg.out_dir) / "cache.jsonl").string());

  const ExtractionReport report =
      extract_batch(corpus.examples, *backend, cfg.backend, prompts, cache,
                    SignEpsilon{cfg.sign_epsilon});

  const double degraded_fraction =
      report.total == 0
          ? 0.0
          : static_cast<double>(report.degraded) /
                static_cast<double>(report.total);

  nlohmann::json j = extraction_report_to_json(report);
  j["rejected_rows"] = corpus.rejects.size();
  j["split_warnings"] = corpus.split_warnings;
  j["manifest_reused"] = corpus.manifest_reused;
  j["cache_warnings"] = cache.warnings();
  j["degraded_fraction"] = degraded_fraction;
  j["backend_tag"] = backend_tag_for(cfg);
  write_json(fs::path(cfg.out_dir) / "extraction_report.json", j);

  CommandResult result;
  result.report = j;
  result.exit_code = degraded_fraction > cfg.max_degraded_fraction ? 1 : 0;
  return result;
}

CommandResult cmd_train(const RunConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  LoadedCorpus corpus = load_examples(cfg);
  const RecordSet records = load_records(cfg, corpus.examples);
  const FeatureSchema schema = default_feature_schema(cfg.feature_eps_div);

  std::vector<int> y;
  const Matrix X =
      features_for(corpus.examples, records, schema, Split::Train, Split::Val, y);
  if (X.empty()) throw std::runtime_error("train: no train/val examples");

  const GridSearchResult gs = grid_search(X, y, cfg.train);
  ArbiterModel model = finalize(X, y, gs.c_star, gs.tau_star, schema,
                                schema.names, cfg.train, gs.report);
  model.meta.backend_tag = backend_tag_for(cfg);

  save_model(model, (fs::path(cfg.out_dir) / "model.json").string());
  write_json(fs::path(cfg.out_dir) / "cv_report.json",
             cv_report_to_json(gs.report));

  CommandResult result;
  result.report = nlohmann::json{
      {"best_c", gs.c_star},
      {"best_threshold", gs.tau_star},
      {"train_val_rows", X.size()},
      {"degraded_records", records.degraded},
      {"model_path", (fs::path(cfg.out_dir) / "model.json").string()}};
  return result;
}

CommandResult cmd_eval(const RunConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  LoadedCorpus corpus = load_examples(cfg);
  const RecordSet records = load_records(cfg, corpus.examples);
  const ArbiterModel model =
      load_model((fs::path(cfg.out_dir) / "model.json").string());
  const FeatureSchema schema = default_feature_schema(model.eps_div);

  std::vector<int> y_test;
  std::vector<int> pred;
  std::vector<SignalRecord> test_records;
  for (std::size_t i = 0; i < corpus.examples.size(); ++i) {
    if (corpus.examples[i].split != Split::Test) continue;
    const SignalRecord& r = records.records[i];
    const FeatureVector phi = build_features(
        r.inconsistency.abs_d, r.intent.t_sar, r.inconsistency.sd, schema);
    pred.push_back(predict(model, phi, schema).label);
    y_test.push_back(corpus.examples[i].label);
    test_records.push_back(r);
  }
  if (y_test.empty()) throw std::runtime_error("eval: no test examples");

  const EvalReport report = evaluate(pred, y_test);
  const std::string scope =
      fs::path(cfg.corpus.path).filename().string() + " [test]";
  const SignalStats stats = signal_stats(test_records, pred, y_test, scope);

  nlohmann::json j{{"scope", scope},
                   {"eval", eval_report_to_json(report)},
                   {"signal_stats", signal_stats_to_json(stats)},
                   {"threshold", model.threshold}};
  write_json(fs::path(cfg.out_dir) / "eval_report.json", j);
  write_text(fs::path(cfg.out_dir) / "eval_table.txt",
             render_eval_row(scope, report) + "\n" + render_signal_stats(stats));

  CommandResult result;
  result.report = j;
  return result;
}

CommandResult cmd_ablate(const RunConfig& cfg,
                         const std::vector<AblationConfig>& configs) {
  fs::create_directories(cfg.out_dir);
  LoadedCorpus corpus = load_examples(cfg);
  const RecordSet records = load_records(cfg, corpus.examples);
  const FeatureSchema schema = default_feature_schema(cfg.feature_eps_div);

  const std::vector<AblationResult> results = run_ablation(
      corpus.examples, records.by_id, configs, cfg.train, schema);

  const nlohmann::json j = ablation_to_json(results);
  write_json(fs::path(cfg.out_dir) / "ablation_report.json", j);
  write_text(fs::path(cfg.out_dir) / "ablation_table.txt",
             render_ablation_table(results));

  CommandResult result;
  result.report = j;
  return result;
}

CommandResult cmd_explain(const RunConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  const ArbiterModel model =
      load_model((fs::path(cfg.out_dir) / "model.json").string());
  const WeightReport report = explain_weights(model);

  const nlohmann::json j = weight_report_to_json(report);
  write_json(fs::path(cfg.out_dir) / "weights.json", j);
  write_text(fs::path(cfg.out_dir) / "weights_table.txt",
             render_weight_table(report));

  CommandResult result;
  result.report = j;
  return result;
}

CommandResult cmd_trace(const RunConfig& cfg, const std::string& utterance) {
  fs::create_directories(cfg.out_dir);
  if (utterance.empty())
    throw std::runtime_error("trace: utterance text is required");

  const ArbiterModel model =
      load_model((fs::path(cfg.out_dir) / "model.json").string());
  const FeatureSchema schema = default_feature_schema(model.eps_div);

  const PromptLibrary prompts = PromptLibrary::load(cfg.prompts_dir);
  SignalCache cache((fs::path(cfg.out_dir) / "cache.jsonl").string());
  const std::string model_tag =
      cfg.backend_mode == "mock" ? std::string("mock") : cfg.backend.model;
  const std::string tag = model_tag + ":" + prompts.version();
  const std::string key = cache_key(utterance, tag);
  const SignEpsilon eps{cfg.sign_epsilon};

  Utterance u;
  u.id = "trace:" + key;
  u.text = utterance;

  SignalRecord record;
  if (const auto hit = cache.get(key)) {
    record = *hit;
    record.inconsistency =
        make_inconsistency(record.literal.m_literal, record.norm.e_norm, eps);
  } else {
    const auto backend = make_backend(cfg);
    record = run_agents(u, *backend, cfg.backend, prompts, eps);
    cache.put(key, record);
  }

  const DecisionTrace trace = trace_decision(u, record, model, schema);
  nlohmann::json j = trace_to_json(trace);
  write_json(fs::path(cfg.out_dir) / "trace.json", j);
  const std::string text = render_trace(trace);
  write_text(fs::path(cfg.out_dir) / "trace.txt", text);
  j["text"] = text;

  CommandResult result;
  result.report = j;
  return result;
}

}  // namespace wmsar
