#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace wmsar {

enum class Split { Train, Val, Test };

const char* split_name(Split s);
Split split_from_name(const std::string& name);

struct Utterance {
  std::string id;
  std::string text;
};

struct LabeledExample {
  Utterance utterance;
  int label = 0;  // {0,1}
  Split split = Split::Train;
};

// Literal observation: surface sentiment of the utterance alone.
struct LiteralSignal {
  double m_literal = 0.0;  // [-1, 1]
  std::string rationale;
};

// Latent state hypothesis: who is talking, where, and what just happened.
struct ContextHypothesis {
  std::string actor_relation;
  std::string scene;
  std::string prior_event;
  std::string rationale;
};

// Expected sentiment given only the context hypothesis.
struct NormSignal {
  double e_norm = 0.0;  // [-1, 1]
  std::string rationale;
};

// Pragmatic intent strength plus free-form intent/emotion hypotheses.
struct IntentSignal {
  double t_sar = 0.0;  // [0, 1]
  std::vector<std::string> intentions;
  std::vector<std::string> emotions;
  std::string rationale;
};

// Deterministic expectation-violation block, derived from literal and norm.
struct InconsistencySignal {
  double d = 0.0;      // m_literal - e_norm, in [-2, 2]
  double abs_d = 0.0;  // |d|
  int sd = 0;          // {0, 1}: banded signs of m_literal and e_norm disagree
};

struct SignalRecord {
  std::string utterance_id;
  LiteralSignal literal;
  ContextHypothesis context;
  NormSignal norm;
  IntentSignal intent;
  InconsistencySignal inconsistency;
  std::string backend_tag;
  std::vector<std::string> degraded;  // stages that fell back to defaults

  bool is_degraded() const { return !degraded.empty(); }
};

struct Prediction {
  double probability = 0.0;  // [0, 1]
  int label = 0;             // 1 iff probability >= threshold_used
  double threshold_used = 0.5;
};

// Clamp into [-1, 1]; non-finite input maps to 0.
double clamp_signed(double x);
// Clamp into [0, 1]; non-finite input maps to 0.
double clamp_unit(double x);

Prediction make_prediction(double probability, double threshold);

// Returns human-readable invariant violations; empty means the record is
// well-formed. sign_epsilon drives the recomputation check on the
// inconsistency block.
std::vector<std::string> validate_record(const SignalRecord& r,
                                         double sign_epsilon = 0.05);

void to_json(nlohmann::json& j, const Utterance& u);
void from_json(const nlohmann::json& j, Utterance& u);
void to_json(nlohmann::json& j, const LabeledExample& e);
void from_json(const nlohmann::json& j, LabeledExample& e);
void to_json(nlohmann::json& j, const LiteralSignal& s);
void from_json(const nlohmann::json& j, LiteralSignal& s);
void to_json(nlohmann::json& j, const ContextHypothesis& c);
void from_json(const nlohmann::json& j, ContextHypothesis& c);
void to_json(nlohmann::json& j, const NormSignal& s);
void from_json(const nlohmann::json& j, NormSignal& s);
void to_json(nlohmann::json& j, const IntentSignal& s);
void from_json(const nlohmann::json& j, IntentSignal& s);
void to_json(nlohmann::json& j, const InconsistencySignal& s);
void from_json(const nlohmann::json& j, InconsistencySignal& s);
void to_json(nlohmann::json& j, const SignalRecord& r);
void from_json(const nlohmann::json& j, SignalRecord& r);
void to_json(nlohmann::json& j, const Prediction& p);
void from_json(const nlohmann::json& j, Prediction& p);

}  // namespace wmsar
