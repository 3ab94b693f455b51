#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include <unistd.h>

#include "wmsar/agents.hpp"
#include "wmsar/backend.hpp"
#include "wmsar/data_io.hpp"

using namespace wmsar;

namespace {

const std::string kPromptsDir = std::string(WMSAR_SOURCE_DIR) + "/prompts/v1";
const std::string kLexiconDir =
    std::string(WMSAR_SOURCE_DIR) + "/fixtures/lexicons";

std::string good_response(AgentKind kind) {
  switch (kind) {
    case AgentKind::Literal:
      return R"({"m_literal": 0.8, "rationale": "glowing words"})";
    case AgentKind::Context:
      return R"({"actor_relation": "coworkers", "scene": "open office",)"
             R"( "prior_event": "the demo crashed", "rationale": "guess"})";
    case AgentKind::Norm:
      return R"({"e_norm": -0.6, "rationale": "crash is bad"})";
    case AgentKind::Intent:
      return R"({"t_sar": 0.9, "intentions": ["mock"], "emotions": ["scorn"],)"
             R"( "rationale": "classic"})";
  }
  return "";
}

// Test double with a per-stage response script. Entry "<<garbage>>" returns
// unparseable text, "<<throw>>" raises a transport error; the last entry
// repeats once the script runs out. Records every call for ordering checks.
class ScriptedBackend : public ChatBackend {
 public:
  std::string complete(const AgentCall& call) override {
    std::lock_guard<std::mutex> lock(mutex_);
    log_.push_back(call);
    auto& n = counts_[call.kind];
    const auto& script = scripts_[call.kind];
    std::string entry;
    if (script.empty()) {
      entry = good_response(call.kind);
    } else {
      entry = n < script.size() ? script[n] : script.back();
    }
    ++n;
    if (entry == "<<garbage>>") return "sorry, I cannot help with that";
    if (entry == "<<throw>>") throw BackendError("scripted transport failure");
    return entry;
  }

  std::string tag() const override { return "scripted"; }

  void script(AgentKind kind, std::vector<std::string> entries) {
    scripts_[kind] = std::move(entries);
  }

  std::size_t count(AgentKind kind) {
    std::lock_guard<std::mutex> lock(mutex_);
    return counts_[kind];
  }

  std::vector<AgentCall> log() {
    std::lock_guard<std::mutex> lock(mutex_);
    return log_;
  }

 private:
  std::mutex mutex_;
  std::map<AgentKind, std::vector<std::string>> scripts_;
  std::map<AgentKind, std::size_t> counts_;
  std::vector<AgentCall> log_;
};

BackendConfig fast_config() {
  BackendConfig cfg;
  cfg.max_retries = 2;
  cfg.backoff_base_seconds = 0.0;
  cfg.max_concurrent = 4;
  return cfg;
}

std::string temp_path(const std::string& stem) {
  return "/tmp/wmsar_agents_" + std::to_string(::getpid()) + "_" + stem;
}

}  // namespace

TEST_CASE("literal parser accepts strict json") {
  const LiteralSignal s =
      parse_literal_response(R"({"m_literal": 0.8, "rationale": "praise"})");
  CHECK(s.m_literal == 0.8);
  CHECK(s.rationale == "praise");
}

TEST_CASE("literal parser tolerates fences and surrounding prose") {
  CHECK(parse_literal_response("```json\n{\"m_literal\": -0.4}\n```")
            .m_literal == -0.4);
  CHECK(parse_literal_response("Sure! Here you go: {\"m_literal\": 0.25}")
            .m_literal == 0.25);
}

TEST_CASE("literal parser clamps out-of-range scores") {
  CHECK(parse_literal_response(R"({"m_literal": 3.5})").m_literal == 1.0);
  CHECK(parse_literal_response(R"({"m_literal": -2.0})").m_literal == -1.0);
}

TEST_CASE("literal parser repairs free-text responses") {
  CHECK(parse_literal_response("m_literal: roughly 0.3 I'd say").m_literal ==
        0.3);
  CHECK(parse_literal_response("the m_literal is -0.7 overall").m_literal ==
        -0.7);
  // A quoted number fails strict typing but the free-text scan recovers it.
  CHECK(parse_literal_response(R"({"m_literal": "0.8"})").m_literal == 0.8);
}

TEST_CASE("literal parser rejects hopeless responses") {
  CHECK_THROWS_AS(parse_literal_response("no idea"), ParseFailure);
  CHECK_THROWS_AS(parse_literal_response(R"({"score": 0.8})"), ParseFailure);
  CHECK_THROWS_AS(parse_literal_response(""), ParseFailure);
}

TEST_CASE("context parser fills gaps with unknown") {
  const ContextHypothesis full = parse_context_response(
      R"({"actor_relation": "rivals", "scene": "court", "prior_event": "a foul"})");
  CHECK(full.actor_relation == "rivals");
  CHECK(full.scene == "court");
  CHECK(full.prior_event == "a foul");

  const ContextHypothesis partial =
      parse_context_response(R"({"scene": "office"})");
  CHECK(partial.actor_relation == "unknown");
  CHECK(partial.scene == "office");
  CHECK(partial.prior_event == "unknown");

  const ContextHypothesis blank =
      parse_context_response(R"({"scene": "   ", "prior_event": ""})");
  CHECK(blank.scene == "unknown");
  CHECK(blank.prior_event == "unknown");
}

TEST_CASE("context parser repairs quoted fields from prose") {
  const ContextHypothesis c = parse_context_response(
      "I'd guess actor_relation: \"old friends\" and scene: \"a diner\".");
  CHECK(c.actor_relation == "old friends");
  CHECK(c.scene == "a diner");
  CHECK(c.prior_event == "unknown");
}

TEST_CASE("context parser rejects responses without any field") {
  CHECK_THROWS_AS(parse_context_response("hello there"), ParseFailure);
  CHECK_THROWS_AS(parse_context_response(R"({"mood": "tense"})"), ParseFailure);
}

TEST_CASE("norm and intent parsers handle scalars and lists") {
  CHECK(parse_norm_response(R"({"e_norm": -0.6})").e_norm == -0.6);
  CHECK(parse_norm_response("e_norm = 0.4 because repairs went well").e_norm ==
        0.4);

  const IntentSignal t = parse_intent_response(
      R"({"t_sar": 0.9, "intentions": ["mock", "tease"], "emotions": ["contempt"]})");
  CHECK(t.t_sar == 0.9);
  CHECK(t.intentions == std::vector<std::string>{"mock", "tease"});
  CHECK(t.emotions == std::vector<std::string>{"contempt"});

  // Non-string list entries are dropped rather than fatal.
  const IntentSignal mixed =
      parse_intent_response(R"({"t_sar": 0.2, "intentions": ["a", 3]})");
  CHECK(mixed.intentions == std::vector<std::string>{"a"});

  CHECK(parse_intent_response(R"({"t_sar": -0.5})").t_sar == 0.0);
  CHECK(parse_intent_response(R"({"t_sar": 7})").t_sar == 1.0);
}

TEST_CASE("stage defaults are the documented neutral values") {
  CHECK(default_literal().m_literal == 0.0);
  CHECK(default_norm().e_norm == 0.0);
  CHECK(default_intent().t_sar == 0.5);
  const ContextHypothesis c = default_context();
  CHECK(c.actor_relation == "unknown");
  CHECK(c.scene == "unknown");
  CHECK(c.prior_event == "unknown");
}

TEST_CASE("prompt library renders utterance and context slots") {
  const PromptLibrary lib = PromptLibrary::load(kPromptsDir);
  CHECK(lib.version() == "v1");

  const Utterance u{"u1", "XMARKERX what a day"};
  ContextHypothesis ctx;
  ctx.actor_relation = "ACTORX";
  ctx.scene = "SCENEX";
  ctx.prior_event = "EVENTX";

  const std::string literal = lib.render(AgentKind::Literal, u, std::nullopt);
  CHECK(literal.find("XMARKERX what a day") != std::string::npos);

  const std::string norm = lib.render(AgentKind::Norm, u, ctx);
  CHECK(norm.find("ACTORX") != std::string::npos);
  CHECK(norm.find("SCENEX") != std::string::npos);
  CHECK(norm.find("EVENTX") != std::string::npos);
  // The norm stage judges expectations without seeing the utterance at all.
  CHECK(norm.find("XMARKERX") == std::string::npos);
  CHECK(lib.raw(AgentKind::Norm).find("{{utterance}}") == std::string::npos);

  const std::string intent = lib.render(AgentKind::Intent, u, ctx);
  CHECK(intent.find("XMARKERX") != std::string::npos);
  CHECK(intent.find("EVENTX") != std::string::npos);
}

TEST_CASE("prompt library enforces which stages receive context") {
  const PromptLibrary lib = PromptLibrary::load(kPromptsDir);
  const Utterance u{"u1", "fine"};
  ContextHypothesis ctx;
  ctx.actor_relation = "a";
  ctx.scene = "b";
  ctx.prior_event = "c";

  CHECK_THROWS_AS(static_cast<void>(lib.render(AgentKind::Literal, u, ctx)),
                  std::invalid_argument);
  CHECK_THROWS_AS(static_cast<void>(lib.render(AgentKind::Context, u, ctx)),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      static_cast<void>(lib.render(AgentKind::Norm, u, std::nullopt)),
      std::invalid_argument);
  CHECK_THROWS_AS(
      static_cast<void>(lib.render(AgentKind::Intent, u, std::nullopt)),
      std::invalid_argument);
}

TEST_CASE("backend tag combines model identity and prompt version") {
  ScriptedBackend backend;
  const PromptLibrary lib = PromptLibrary::load(kPromptsDir);
  CHECK(make_backend_tag(backend, lib) == "scripted:v1");
}

TEST_CASE("backend config validation rejects bad fields") {
  BackendConfig cfg;
  CHECK_NOTHROW(validate_backend_config(cfg));
  cfg.max_retries = 11;
  CHECK_THROWS_AS(validate_backend_config(cfg), std::invalid_argument);
  cfg = BackendConfig{};
  cfg.max_concurrent = 0;
  CHECK_THROWS_AS(validate_backend_config(cfg), std::invalid_argument);
  cfg = BackendConfig{};
  cfg.timeout_seconds = 0.0;
  CHECK_THROWS_AS(validate_backend_config(cfg), std::invalid_argument);
  cfg = BackendConfig{};
  cfg.model.clear();
  CHECK_THROWS_AS(validate_backend_config(cfg), std::invalid_argument);
}

TEST_CASE("run_agents assembles a full record on the happy path") {
  ScriptedBackend backend;
  const PromptLibrary lib = PromptLibrary::load(kPromptsDir);
  const Utterance u{"u1", "great, another outage"};

  const SignalRecord rec = run_agents(u, backend, fast_config(), lib);
  CHECK(rec.utterance_id == "u1");
  CHECK(rec.backend_tag == "scripted:v1");
  CHECK(rec.literal.m_literal == 0.8);
  CHECK(rec.context.scene == "open office");
  CHECK(rec.norm.e_norm == -0.6);
  CHECK(rec.intent.t_sar == 0.9);
  CHECK(rec.degraded.empty());

  // The expectation-violation block is derived from the stage outputs.
  CHECK(rec.inconsistency.d == 0.8 - -0.6);
  CHECK(rec.inconsistency.abs_d == rec.inconsistency.d);
  CHECK(rec.inconsistency.sd == 1);
  CHECK(validate_record(rec).empty());
}

TEST_CASE("run_agents retries failed stages up to the attempt budget") {
  ScriptedBackend backend;
  backend.script(AgentKind::Literal,
                 {"<<garbage>>", "<<throw>>", good_response(AgentKind::Literal)});
  const PromptLibrary lib = PromptLibrary::load(kPromptsDir);
  BackendConfig cfg = fast_config();
  cfg.max_retries = 2;  // three attempts total

  const SignalRecord rec = run_agents({"u1", "fine"}, backend, cfg, lib);
  CHECK(backend.count(AgentKind::Literal) == 3);
  CHECK(rec.literal.m_literal == 0.8);
  CHECK(rec.degraded.empty());
}

TEST_CASE("run_agents falls back to defaults after exhausting retries") {
  ScriptedBackend backend;
  backend.script(AgentKind::Literal, {"<<garbage>>"});
  backend.script(AgentKind::Intent, {"<<throw>>"});
  const PromptLibrary lib = PromptLibrary::load(kPromptsDir);
  BackendConfig cfg = fast_config();
  cfg.max_retries = 1;  // two attempts per stage

  const SignalRecord rec = run_agents({"u1", "fine"}, backend, cfg, lib);
  CHECK(backend.count(AgentKind::Literal) == 2);
  CHECK(backend.count(AgentKind::Intent) == 2);
  CHECK(rec.literal.m_literal == 0.0);
  CHECK(rec.intent.t_sar == 0.5);
  CHECK(rec.degraded == std::vector<std::string>{"literal", "intent"});
  CHECK(rec.is_degraded());
  // Healthy stages are unaffected.
  CHECK(rec.norm.e_norm == -0.6);
  CHECK(validate_record(rec).empty());
}

TEST_CASE("run_agents applies exponential backoff between attempts") {
  ScriptedBackend backend;
  backend.script(AgentKind::Norm, {"<<garbage>>"});
  const PromptLibrary lib = PromptLibrary::load(kPromptsDir);
  BackendConfig cfg = fast_config();
  cfg.max_retries = 2;
  cfg.backoff_base_seconds = 0.02;  // delays of 0.02s then 0.04s

  const auto start = std::chrono::steady_clock::now();
  const SignalRecord rec = run_agents({"u1", "fine"}, backend, cfg, lib);
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  CHECK(rec.degraded == std::vector<std::string>{"norm"});
  CHECK(backend.count(AgentKind::Norm) == 3);
  CHECK(elapsed >= 0.05);
}

TEST_CASE("norm and intent start only after the context resolves") {
  ScriptedBackend backend;
  const PromptLibrary lib = PromptLibrary::load(kPromptsDir);
  (void)run_agents({"u1", "fine"}, backend, fast_config(), lib);

  const std::vector<AgentCall> log = backend.log();
  REQUIRE(log.size() == 4);
  std::size_t last_context = 0, first_downstream = log.size();
  for (std::size_t i = 0; i < log.size(); ++i) {
    if (log[i].kind == AgentKind::Context) last_context = i;
    if (log[i].kind == AgentKind::Norm || log[i].kind == AgentKind::Intent)
      first_downstream = std::min(first_downstream, i);
  }
  CHECK(last_context < first_downstream);

  // Downstream stages receive the parsed context hypothesis verbatim.
  for (const AgentCall& call : log) {
    if (call.kind == AgentKind::Literal || call.kind == AgentKind::Context) {
      CHECK(!call.context.has_value());
    } else {
      REQUIRE(call.context.has_value());
      CHECK(call.context->scene == "open office");
      CHECK(call.context->prior_event == "the demo crashed");
    }
  }
}

TEST_CASE("a degraded context still feeds defaults to downstream stages") {
  ScriptedBackend backend;
  backend.script(AgentKind::Context, {"<<garbage>>"});
  const PromptLibrary lib = PromptLibrary::load(kPromptsDir);
  BackendConfig cfg = fast_config();
  cfg.max_retries = 0;

  const SignalRecord rec = run_agents({"u1", "fine"}, backend, cfg, lib);
  CHECK(rec.degraded == std::vector<std::string>{"context"});
  CHECK(rec.context.scene == "unknown");

  for (const AgentCall& call : backend.log()) {
    if (call.kind == AgentKind::Norm || call.kind == AgentKind::Intent) {
      REQUIRE(call.context.has_value());
      CHECK(call.context->prior_event == "unknown");
    }
  }
}

TEST_CASE("extract_batch serves repeat runs entirely from the cache") {
  const std::string cache_path = temp_path("cache.jsonl");
  std::remove(cache_path.c_str());

  std::vector<LabeledExample> examples;
  for (int i = 0; i < 6; ++i) {
    LabeledExample ex;
    ex.utterance = {"u" + std::to_string(i),
                    "utterance number " + std::to_string(i)};
    ex.label = i % 2;
    examples.push_back(ex);
  }

  MockChatBackend backend(MockLexicons::load(kLexiconDir));
  const PromptLibrary lib = PromptLibrary::load(kPromptsDir);
  const BackendConfig cfg = fast_config();

  {
    SignalCache cache(cache_path);
    const ExtractionReport r =
        extract_batch(examples, backend, cfg, lib, cache);
    CHECK(r.total == 6);
    CHECK(r.extracted == 6);
    CHECK(r.from_cache == 0);
    CHECK(r.degraded == 0);
    CHECK(cache.size() == 6);
  }
  CHECK(backend.calls() == 24);  // four stages per utterance

  {
    // A fresh cache object replays the JSONL file; no backend traffic.
    SignalCache cache(cache_path);
    CHECK(cache.size() == 6);
    const ExtractionReport r =
        extract_batch(examples, backend, cfg, lib, cache);
    CHECK(r.total == 6);
    CHECK(r.extracted == 0);
    CHECK(r.from_cache == 6);
  }
  CHECK(backend.calls() == 24);

  std::remove(cache_path.c_str());
}

TEST_CASE("extract_batch counts and sorts degraded utterances") {
  const std::string cache_path = temp_path("degraded.jsonl");
  std::remove(cache_path.c_str());

  std::vector<LabeledExample> examples;
  for (const char* id : {"zeta", "alpha", "mid"}) {
    LabeledExample ex;
    ex.utterance = {id, std::string("text for ") + id};
    examples.push_back(ex);
  }

  ScriptedBackend backend;
  backend.script(AgentKind::Intent, {"<<throw>>"});
  const PromptLibrary lib = PromptLibrary::load(kPromptsDir);
  BackendConfig cfg = fast_config();
  cfg.max_retries = 0;

  SignalCache cache(cache_path);
  const ExtractionReport r = extract_batch(examples, backend, cfg, lib, cache);
  CHECK(r.total == 3);
  CHECK(r.degraded == 3);
  CHECK(r.degraded_ids == std::vector<std::string>{"alpha", "mid", "zeta"});

  const auto j = extraction_report_to_json(r);
  CHECK(j["degraded"] == 3);
  CHECK(j["total"] == 3);

  std::remove(cache_path.c_str());
}
