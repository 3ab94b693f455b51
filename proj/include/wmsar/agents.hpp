#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "wmsar/data_io.hpp"
#include "wmsar/inconsistency.hpp"
#include "wmsar/signal_model.hpp"

namespace wmsar {

enum class AgentKind { Literal, Context, Norm, Intent };

const char* agent_kind_name(AgentKind k);

struct BackendConfig {
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string model = "gpt-4.1-mini";
  std::string api_key_env = "WMSAR_API_KEY";
  double timeout_seconds = 60.0;
  int max_retries = 3;            // 0..10, extra attempts after the first
  double backoff_base_seconds = 0.5;
  int max_concurrent = 4;         // >= 1
  double temperature = 0.0;
};

// Throws std::invalid_argument on out-of-range fields.
void validate_backend_config(const BackendConfig& cfg);

// One request to the model backend. HTTP backends send `prompt`; the mock
// backend computes from the structured fields instead.
struct AgentCall {
  AgentKind kind = AgentKind::Literal;
  std::string prompt;
  std::string utterance_text;
  std::optional<ContextHypothesis> context;
};

struct BackendError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  // Returns the raw model response text; throws BackendError on transport
  // failure.
  virtual std::string complete(const AgentCall& call) = 0;
  // Model identity half of the backend tag.
  virtual std::string tag() const = 0;
};

// Versioned prompt templates loaded from a directory containing
// literal.txt, context.txt, norm.txt, intent.txt and VERSION.
class PromptLibrary {
 public:
  static PromptLibrary load(const std::string& dir);

  const std::string& version() const { return version_; }
  const std::string& raw(AgentKind k) const;

  // Substitute {{utterance}} / {{actor_relation}} / {{scene}} /
  // {{prior_event}}. Literal and Context must not receive a context;
  // Norm and Intent require one. Violations throw std::invalid_argument.
  std::string render(AgentKind k, const Utterance& u,
                     const std::optional<ContextHypothesis>& ctx) const;

 private:
  std::string version_;
  std::array<std::string, 4> templates_;
};

std::string make_backend_tag(const ChatBackend& backend,
                             const PromptLibrary& prompts);

struct ParseFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Strict-then-repair parsers for agent responses. Strict mode expects a
// JSON object (optionally inside a ```json fence) with the agent's fields;
// the single repair pass pulls the first numeric literal following the
// field name from free text. Scalars are clamped into range; parsed string
// fields fall back to "unknown" when empty. Throws ParseFailure when even
// the repair pass cannot recover the required fields.
LiteralSignal parse_literal_response(const std::string& raw);
ContextHypothesis parse_context_response(const std::string& raw);
NormSignal parse_norm_response(const std::string& raw);
IntentSignal parse_intent_response(const std::string& raw);

using ParsedAgentOutput =
    std::variant<LiteralSignal, ContextHypothesis, NormSignal, IntentSignal>;
ParsedAgentOutput parse_agent_response(AgentKind kind, const std::string& raw);

LiteralSignal default_literal();
ContextHypothesis default_context();
NormSignal default_norm();
IntentSignal default_intent();

// Run the four-stage pipeline for one utterance: literal and context
// concurrently, then norm and intent (both fed the context hypothesis)
// concurrently, then the deterministic inconsistency block. Stages whose
// retries are exhausted fall back to defaults and are listed in
// record.degraded.
SignalRecord run_agents(const Utterance& u, ChatBackend& backend,
                        const BackendConfig& cfg, const PromptLibrary& prompts,
                        SignEpsilon eps = {});

struct ExtractionReport {
  std::size_t total = 0;
  std::size_t from_cache = 0;
  std::size_t extracted = 0;
  std::size_t degraded = 0;
  std::vector<std::string> degraded_ids;
};

// Extract signals for every example, consulting the cache first and writing
// fresh records back. Runs up to cfg.max_concurrent utterances in parallel.
ExtractionReport extract_batch(const std::vector<LabeledExample>& examples,
                               ChatBackend& backend, const BackendConfig& cfg,
                               const PromptLibrary& prompts,
                               SignalCache& cache, SignEpsilon eps = {});

nlohmann::json extraction_report_to_json(const ExtractionReport& r);

}  // namespace wmsar
