#include "wmsar/signal_model.hpp"

#include <cmath>
#include <stdexcept>

#include "wmsar/inconsistency.hpp"

namespace wmsar {

const char* split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  throw std::invalid_argument("unknown split");
}

Split split_from_name(const std::string& name) {
  if (name == "train") return Split::Train;
  if (name == "val") return Split::Val;
  if (name == "test") return Split::Test;
  throw std::invalid_argument("unknown split name: " + name);
}

double clamp_signed(double x) {
  if (!std::isfinite(x)) return 0.0;
  if (x < -1.0) return -1.0;
  if (x > 1.0) return 1.0;
  return x;
}

double clamp_unit(double x) {
  if (!std::isfinite(x)) return 0.0;
  if (x < 0.0) return 0.0;
  if (x > 1.0) return 1.0;
  return x;
}

Prediction make_prediction(double probability, double threshold) {
  Prediction p;
  p.probability = probability;
  p.threshold_used = threshold;
  p.label = probability >= threshold ? 1 : 0;
  return p;
}

std::vector<std::string> validate_record(const SignalRecord& r,
                                         double sign_epsilon) {
  std::vector<std::string> violations;
  auto check_range = [&](double v, double lo, double hi, const char* what) {
    if (!std::isfinite(v)) {
      violations.push_back(std::string(what) + " is not finite");
    } else if (v < lo || v > hi) {
      violations.push_back(std::string(what) + " out of range");
    }
  };

  if (r.utterance_id.empty()) violations.push_back("utterance_id is empty");
  check_range(r.literal.m_literal, -1.0, 1.0, "m_literal");
  check_range(r.norm.e_norm, -1.0, 1.0, "e_norm");
  check_range(r.intent.t_sar, 0.0, 1.0, "t_sar");
  if (r.context.actor_relation.empty())
    violations.push_back("context.actor_relation is empty");
  if (r.context.scene.empty()) violations.push_back("context.scene is empty");
  if (r.context.prior_event.empty())
    violations.push_back("context.prior_event is empty");

  if (std::isfinite(r.literal.m_literal) && std::isfinite(r.norm.e_norm) &&
      std::abs(r.literal.m_literal) <= 1.0 && std::abs(r.norm.e_norm) <= 1.0) {
    const InconsistencySignal expect = make_inconsistency(
        r.literal.m_literal, r.norm.e_norm, SignEpsilon{sign_epsilon});
    if (r.inconsistency.d != expect.d)
      violations.push_back("inconsistency.d does not match m_literal - e_norm");
    if (r.inconsistency.abs_d != expect.abs_d)
      violations.push_back("inconsistency.abs_d does not match |d|");
    if (r.inconsistency.sd != expect.sd)
      violations.push_back("inconsistency.sd does not match banded signs");
  }
  if (r.inconsistency.sd != 0 && r.inconsistency.sd != 1)
    violations.push_back("inconsistency.sd not in {0,1}");
  return violations;
}

void to_json(nlohmann::json& j, const Utterance& u) {
  j = nlohmann::json{{"id", u.id}, {"text", u.text}};
}

void from_json(const nlohmann::json& j, Utterance& u) {
  j.at("id").get_to(u.id);
  j.at("text").get_to(u.text);
}

void to_json(nlohmann::json& j, const LabeledExample& e) {
  j = nlohmann::json{{"utterance", e.utterance},
                     {"label", e.label},
                     {"split", split_name(e.split)}};
}

void from_json(const nlohmann::json& j, LabeledExample& e) {
  j.at("utterance").get_to(e.utterance);
  j.at("label").get_to(e.label);
  e.split = split_from_name(j.at("split").get<std::string>());
}

void to_json(nlohmann::json& j, const LiteralSignal& s) {
  j = nlohmann::json{{"m_literal", s.m_literal}, {"rationale", s.rationale}};
}

void from_json(const nlohmann::json& j, LiteralSignal& s) {
  j.at("m_literal").get_to(s.m_literal);
  s.rationale = j.value("rationale", std::string());
}

void to_json(nlohmann::json& j, const ContextHypothesis& c) {
  j = nlohmann::json{{"actor_relation", c.actor_relation},
                     {"scene", c.scene},
                     {"prior_event", c.prior_event},
                     {"rationale", c.rationale}};
}

void from_json(const nlohmann::json& j, ContextHypothesis& c) {
  j.at("actor_relation").get_to(c.actor_relation);
  j.at("scene").get_to(c.scene);
  j.at("prior_event").get_to(c.prior_event);
  c.rationale = j.value("rationale", std::string());
}

void to_json(nlohmann::json& j, const NormSignal& s) {
  j = nlohmann::json{{"e_norm", s.e_norm}, {"rationale", s.rationale}};
}

void from_json(const nlohmann::json& j, NormSignal& s) {
  j.at("e_norm").get_to(s.e_norm);
  s.rationale = j.value("rationale", std::string());
}

void to_json(nlohmann::json& j, const IntentSignal& s) {
  j = nlohmann::json{{"t_sar", s.t_sar},
                     {"intentions", s.intentions},
                     {"emotions", s.emotions},
                     {"rationale", s.rationale}};
}

void from_json(const nlohmann::json& j, IntentSignal& s) {
  j.at("t_sar").get_to(s.t_sar);
  s.intentions = j.value("intentions", std::vector<std::string>());
  s.emotions = j.value("emotions", std::vector<std::string>());
  s.rationale = j.value("rationale", std::string());
}

void to_json(nlohmann::json& j, const InconsistencySignal& s) {
  j = nlohmann::json{{"d", s.d}, {"abs_d", s.abs_d}, {"sd", s.sd}};
}

void from_json(const nlohmann::json& j, InconsistencySignal& s) {
  j.at("d").get_to(s.d);
  j.at("abs_d").get_to(s.abs_d);
  j.at("sd").get_to(s.sd);
}

void to_json(nlohmann::json& j, const SignalRecord& r) {
  j = nlohmann::json{{"utterance_id", r.utterance_id},
                     {"literal", r.literal},
                     {"context", r.context},
                     {"norm", r.norm},
                     {"intent", r.intent},
                     {"inconsistency", r.inconsistency},
                     {"backend_tag", r.backend_tag},
                     {"degraded", r.degraded}};
}

void from_json(const nlohmann::json& j, SignalRecord& r) {
  j.at("utterance_id").get_to(r.utterance_id);
  j.at("literal").get_to(r.literal);
  j.at("context").get_to(r.context);
  j.at("norm").get_to(r.norm);
  j.at("intent").get_to(r.intent);
  j.at("inconsistency").get_to(r.inconsistency);
  r.backend_tag = j.value("backend_tag", std::string());
  r.degraded = j.value("degraded", std::vector<std::string>());
}

void to_json(nlohmann::json& j, const Prediction& p) {
  j = nlohmann::json{{"probability", p.probability},
                     {"label", p.label},
                     {"threshold_used", p.threshold_used}};
}

void from_json(const nlohmann::json& j, Prediction& p) {
  j.at("probability").get_to(p.probability);
  j.at("label").get_to(p.label);
  j.at("threshold_used").get_to(p.threshold_used);
}

}  // namespace wmsar
