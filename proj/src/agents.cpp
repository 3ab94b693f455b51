#include "wmsar/agents.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <future>
#include <mutex>
#include <sstream>
#include <thread>

namespace wmsar {

const char* agent_kind_name(AgentKind k) {
  switch (k) {
    case AgentKind::Literal: return "literal";
    case AgentKind::Context: return "context";
    case AgentKind::Norm: return "norm";
    case AgentKind::Intent: return "intent";
  }
  throw std::invalid_argument("unknown agent kind");
}

void validate_backend_config(const BackendConfig& cfg) {
  if (cfg.model.empty())
    throw std::invalid_argument("backend config: model must not be empty");
  if (cfg.endpoint.empty())
    throw std::invalid_argument("backend config: endpoint must not be empty");
  if (cfg.api_key_env.empty())
    throw std::invalid_argument("backend config: api_key_env must not be empty");
  if (!(cfg.timeout_seconds > 0.0))
    throw std::invalid_argument("backend config: timeout must be positive");
  if (cfg.max_retries < 0 || cfg.max_retries > 10)
    throw std::invalid_argument("backend config: max_retries must be in 0..10");
  if (cfg.backoff_base_seconds < 0.0)
    throw std::invalid_argument("backend config: backoff must be >= 0");
  if (cfg.max_concurrent < 1)
    throw std::invalid_argument("backend config: max_concurrent must be >= 1");
  if (cfg.temperature < 0.0 || cfg.temperature > 2.0)
    throw std::invalid_argument("backend config: temperature must be in [0,2]");
}

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

void replace_all(std::string& text, const std::string& from,
                 const std::string& to) {
  std::size_t pos = 0;
  while ((pos = text.find(from, pos)) != std::string::npos) {
    text.replace(pos, from.size(), to);
    pos += to.size();
  }
}

// Parse the response as a JSON object, tolerating surrounding prose or a
// code fence by falling back to the outermost brace span.
std::optional<nlohmann::json> try_parse_object(const std::string& raw) {
  const std::string t = trim(raw);
  try {
    nlohmann::json j = nlohmann::json::parse(t);
    if (j.is_object()) return j;
  } catch (const nlohmann::json::exception&) {
  }
  const std::size_t open = t.find('{');
  const std::size_t close = t.rfind('}');
  if (open == std::string::npos || close == std::string::npos || close <= open)
    return std::nullopt;
  try {
    nlohmann::json j = nlohmann::json::parse(t.substr(open, close - open + 1));
    if (j.is_object()) return j;
  } catch (const nlohmann::json::exception&) {
  }
  return std::nullopt;
}

// Repair pass: first numeric literal following the field name in free text.
std::optional<double> scan_number_after(const std::string& text,
                                        const std::string& name) {
  const std::size_t at = text.find(name);
  if (at == std::string::npos) return std::nullopt;
  for (std::size_t i = at + name.size(); i < text.size(); ++i) {
    const char c = text[i];
    const bool start = (c >= '0' && c <= '9') ||
                       ((c == '-' || c == '+' || c == '.') && i + 1 < text.size() &&
                        text[i + 1] >= '0' && text[i + 1] <= '9');
    if (!start) continue;
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(text.c_str() + i, &end);
    if (end != text.c_str() + i && errno != ERANGE) return v;
  }
  return std::nullopt;
}

// Repair pass for string fields: the first quoted span after the name.
std::optional<std::string> scan_string_after(const std::string& text,
                                             const std::string& name) {
  std::size_t at = text.find(name);
  if (at == std::string::npos) return std::nullopt;
  at = text.find(':', at + name.size());
  if (at == std::string::npos) return std::nullopt;
  const std::size_t open = text.find('"', at);
  if (open == std::string::npos) return std::nullopt;
  const std::size_t close = text.find('"', open + 1);
  if (close == std::string::npos) return std::nullopt;
  return text.substr(open + 1, close - open - 1);
}

std::string nonempty_or_unknown(std::string s) {
  s = trim(s);
  return s.empty() ? std::string("unknown") : s;
}

std::optional<double> number_field(const nlohmann::json& j, const char* name) {
  const auto it = j.find(name);
  if (it == j.end() || !it->is_number()) return std::nullopt;
  return it->get<double>();
}

std::vector<std::string> string_list(const nlohmann::json& j,
                                     const char* name) {
  std::vector<std::string> out;
  const auto it = j.find(name);
  if (it == j.end() || !it->is_array()) return out;
  for (const auto& e : *it) {
    if (e.is_string()) out.push_back(e.get<std::string>());
  }
  return out;
}

}  // namespace

LiteralSignal parse_literal_response(const std::string& raw) {
  if (const auto j = try_parse_object(raw)) {
    if (const auto v = number_field(*j, "m_literal")) {
      LiteralSignal s;
      s.m_literal = clamp_signed(*v);
      s.rationale = j->value("rationale", std::string());
      return s;
    }
  }
  if (const auto v = scan_number_after(raw, "m_literal")) {
    LiteralSignal s;
    s.m_literal = clamp_signed(*v);
    return s;
  }
  throw ParseFailure("literal response lacks m_literal");
}

ContextHypothesis parse_context_response(const std::string& raw) {
  if (const auto j = try_parse_object(raw)) {
    if (j->contains("actor_relation") || j->contains("scene") ||
        j->contains("prior_event")) {
      ContextHypothesis c;
      c.actor_relation =
          nonempty_or_unknown(j->value("actor_relation", std::string()));
      c.scene = nonempty_or_unknown(j->value("scene", std::string()));
      c.prior_event =
          nonempty_or_unknown(j->value("prior_event", std::string()));
      c.rationale = j->value("rationale", std::string());
      return c;
    }
  }
  const auto a = scan_string_after(raw, "actor_relation");
  const auto s = scan_string_after(raw, "scene");
  const auto e = scan_string_after(raw, "prior_event");
  if (a || s || e) {
    ContextHypothesis c;
    c.actor_relation = nonempty_or_unknown(a.value_or(""));
    c.scene = nonempty_or_unknown(s.value_or(""));
    c.prior_event = nonempty_or_unknown(e.value_or(""));
    return c;
  }
  throw ParseFailure("context response lacks actor_relation/scene/prior_event");
}

NormSignal parse_norm_response(const std::string& raw) {
  if (const auto j = try_parse_object(raw)) {
    if (const auto v = number_field(*j, "e_norm")) {
      NormSignal s;
      s.e_norm = clamp_signed(*v);
      s.rationale = j->value("rationale", std::string());
      return s;
    }
  }
  if (const auto v = scan_number_after(raw, "e_norm")) {
    NormSignal s;
    s.e_norm = clamp_signed(*v);
    return s;
  }
  throw ParseFailure("norm response lacks e_norm");
}

IntentSignal parse_intent_response(const std::string& raw) {
  if (const auto j = try_parse_object(raw)) {
    if (const auto v = number_field(*j, "t_sar")) {
      IntentSignal s;
      s.t_sar = clamp_unit(*v);
      s.intentions = string_list(*j, "intentions");
      s.emotions = string_list(*j, "emotions");
      s.rationale = j->value("rationale", std::string());
      return s;
    }
  }
  if (const auto v = scan_number_after(raw, "t_sar")) {
    IntentSignal s;
    s.t_sar = clamp_unit(*v);
    return s;
  }
  throw ParseFailure("intent response lacks t_sar");
}

ParsedAgentOutput parse_agent_response(AgentKind kind, const std::string& raw) {
  switch (kind) {
    case AgentKind::Literal: return parse_literal_response(raw);
    case AgentKind::Context: return parse_context_response(raw);
    case AgentKind::Norm: return parse_norm_response(raw);
    case AgentKind::Intent: return parse_intent_response(raw);
  }
  throw std::invalid_argument("unknown agent kind");
}

LiteralSignal default_literal() {
  return {0.0, "default: stage degraded"};
}

ContextHypothesis default_context() {
  return {"unknown", "unknown", "unknown", "default: stage degraded"};
}

NormSignal default_norm() {
  return {0.0, "default: stage degraded"};
}

IntentSignal default_intent() {
  IntentSignal s;
  s.t_sar = 0.5;
  s.rationale = "default: stage degraded";
  return s;
}

PromptLibrary PromptLibrary::load(const std::string& dir) {
  PromptLibrary lib;
  lib.version_ = trim(read_file(dir + "/VERSION"));
  if (lib.version_.empty())
    throw std::runtime_error("prompt library: empty VERSION in " + dir);
  const char* files[4] = {"literal.txt", "context.txt", "norm.txt",
                          "intent.txt"};
  for (int i = 0; i < 4; ++i) {
    lib.templates_[static_cast<std::size_t>(i)] =
        read_file(dir + "/" + files[i]);
    if (trim(lib.templates_[static_cast<std::size_t>(i)]).empty())
      throw std::runtime_error(std::string("prompt library: empty template ") +
                               files[i]);
  }
  return lib;
}

const std::string& PromptLibrary::raw(AgentKind k) const {
  return templates_[static_cast<std::size_t>(k)];
}

std::string PromptLibrary::render(
    AgentKind k, const Utterance& u,
    const std::optional<ContextHypothesis>& ctx) const {
  const bool wants_context = k == AgentKind::Norm || k == AgentKind::Intent;
  if (wants_context && !ctx)
    throw std::invalid_argument(std::string(agent_kind_name(k)) +
                                " prompt requires a context hypothesis");
  if (!wants_context && ctx)
    throw std::invalid_argument(std::string(agent_kind_name(k)) +
                                " prompt must not receive a context");

  std::string text = raw(k);
  // The norm stage judges expectations from context alone; its template has
  // no utterance slot.
  if (k != AgentKind::Norm) replace_all(text, "{{utterance}}", u.text);
  if (ctx) {
    replace_all(text, "{{actor_relation}}", ctx->actor_relation);
    replace_all(text, "{{scene}}", ctx->scene);
    replace_all(text, "{{prior_event}}", ctx->prior_event);
  }
  if (text.find("{{") != std::string::npos)
    throw std::invalid_argument(std::string(agent_kind_name(k)) +
                                " template has unresolved placeholders");
  return text;
}

std::string make_backend_tag(const ChatBackend& backend,
                             const PromptLibrary& prompts) {
  return backend.tag() + ":" + prompts.version();
}

namespace {

struct StageOutcome {
  ParsedAgentOutput output;
  bool degraded = false;
};

StageOutcome run_stage(const Utterance& u, ChatBackend& backend,
                       const BackendConfig& cfg, const PromptLibrary& prompts,
                       AgentKind kind,
                       const std::optional<ContextHypothesis>& ctx) {
  AgentCall call;
  call.kind = kind;
  call.prompt = prompts.render(kind, u, ctx);
  call.utterance_text = u.text;
  call.context = ctx;

  const int attempts = cfg.max_retries + 1;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0 && cfg.backoff_base_seconds > 0.0) {
      const double delay =
          cfg.backoff_base_seconds * static_cast<double>(1 << (attempt - 1));
      std::this_thread::sleep_for(std::chrono::duration<double>(delay));
    }
    try {
      const std::string raw = backend.complete(call);
      return {parse_agent_response(kind, raw), false};
    } catch (const ParseFailure&) {
      // fall through to retry
    } catch (const BackendError&) {
      // fall through to retry
    }
  }

  switch (kind) {
    case AgentKind::Literal: return {default_literal(), true};
    case AgentKind::Context: return {default_context(), true};
    case AgentKind::Norm: return {default_norm(), true};
    case AgentKind::Intent: return {default_intent(), true};
  }
  throw std::invalid_argument("unknown agent kind");
}

}  // namespace

SignalRecord run_agents(const Utterance& u, ChatBackend& backend,
                        const BackendConfig& cfg, const PromptLibrary& prompts,
                        SignEpsilon eps) {
  validate_backend_config(cfg);

  SignalRecord rec;
  rec.utterance_id = u.id;
  rec.backend_tag = make_backend_tag(backend, prompts);

  // Literal and context have no mutual dependency and run concurrently.
  auto literal_future = std::async(std::launch::async, [&] {
    return run_stage(u, backend, cfg, prompts, AgentKind::Literal, std::nullopt);
  });
  auto context_future = std::async(std::launch::async, [&] {
    return run_stage(u, backend, cfg, prompts, AgentKind::Context, std::nullopt);
  });
  StageOutcome literal = literal_future.get();
  StageOutcome context = context_future.get();
  rec.literal = std::get<LiteralSignal>(literal.output);
  rec.context = std::get<ContextHypothesis>(context.output);

  // Norm and intent both consume the context hypothesis, so they start only
  // after it resolves; they are independent of each other.
  const std::optional<ContextHypothesis> ctx = rec.context;
  auto norm_future = std::async(std::launch::async, [&] {
    return run_stage(u, backend, cfg, prompts, AgentKind::Norm, ctx);
  });
  auto intent_future = std::async(std::launch::async, [&] {
    return run_stage(u, backend, cfg, prompts, AgentKind::Intent, ctx);
  });
  StageOutcome norm = norm_future.get();
  StageOutcome intent = intent_future.get();
  rec.norm = std::get<NormSignal>(norm.output);
  rec.intent = std::get<IntentSignal>(intent.output);

  rec.inconsistency = make_inconsistency(rec.literal.m_literal,
                                         rec.norm.e_norm, eps);

  if (literal.degraded) rec.degraded.push_back("literal");
  if (context.degraded) rec.degraded.push_back("context");
  if (norm.degraded) rec.degraded.push_back("norm");
  if (intent.degraded) rec.degraded.push_back("intent");
  return rec;
}

ExtractionReport extract_batch(const std::vector<LabeledExample>& examples,
                               ChatBackend& backend, const BackendConfig& cfg,
                               const PromptLibrary& prompts,
                               SignalCache& cache, SignEpsilon eps) {
  validate_backend_config(cfg);
  const std::string tag = make_backend_tag(backend, prompts);

  ExtractionReport report;
  report.total = examples.size();

  std::mutex report_mutex;
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= examples.size()) return;
      try {
        const LabeledExample& ex = examples[i];
        const std::string key = cache_key(ex.utterance.text, tag);
        SignalRecord record;
        bool fresh = false;
        if (const auto hit = cache.get(key)) {
          record = *hit;
        } else {
          record = run_agents(ex.utterance, backend, cfg, prompts, eps);
          const auto violations = validate_record(record, eps.epsilon);
          if (!violations.empty())
            throw std::runtime_error("extract: invalid record for " +
                                     ex.utterance.id + ": " + violations[0]);
          cache.put(key, record);
          fresh = true;
        }
        std::lock_guard<std::mutex> lock(report_mutex);
        if (fresh) {
          report.extracted++;
        } else {
          report.from_cache++;
        }
        if (record.is_degraded()) {
          report.degraded++;
          report.degraded_ids.push_back(ex.utterance.id);
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  const std::size_t workers = std::min<std::size_t>(
      static_cast<std::size_t>(cfg.max_concurrent), examples.size());
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::max<std::size_t>(workers, 1); ++w)
    pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);

  std::sort(report.degraded_ids.begin(), report.degraded_ids.end());
  return report;
}

nlohmann::json extraction_report_to_json(const ExtractionReport& r) {
  return nlohmann::json{{"total", r.total},
                        {"from_cache", r.from_cache},
                        {"extracted", r.extracted},
                        {"degraded", r.degraded},
                        {"degraded_ids", r.degraded_ids}};
}

}  // namespace wmsar
