#include "wmsar/features.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace wmsar {

namespace {

struct FeatureDef {
  const char* name;
  bool uses_d;
  bool uses_t;
  bool uses_s;
  bool base;  // survives NoInteraction
};

// Frozen emission order. Any change here is a schema version change.
constexpr FeatureDef kFeatureDefs[kFeatureDim] = {
    {"abs_d", true, false, false, true},
    {"t_sar", false, true, false, true},
    {"sd", false, false, true, true},
    {"d_plus_t", true, true, false, false},
    {"d_minus_t", true, true, false, false},
    {"t_minus_d", true, true, false, false},
    {"d_times_t", true, true, false, false},
    {"d_over_t", true, true, false, false},
    {"t_over_d", true, true, false, false},
    {"d_sq", true, false, false, false},
    {"t_sq", false, true, false, false},
    {"sqrt_d", true, false, false, false},
    {"sqrt_t", false, true, false, false},
    {"log1p_d", true, false, false, false},
    {"log1p_t", false, true, false, false},
    {"sigmoid_d", true, false, false, false},
    {"sigmoid_t", false, true, false, false},
    {"sd_d", true, false, true, false},
    {"sd_t", false, true, true, false},
    {"sd_d_plus_t", true, true, true, false},
    {"sd_d_minus_t", true, true, true, false},
    {"one_minus_sd", false, false, true, false},
    {"nosd_d", true, false, true, false},
    {"nosd_t", false, true, true, false},
};

double stable_sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double ez = std::exp(z);
  return ez / (1.0 + ez);
}

}  // namespace

FeatureSchema default_feature_schema(double eps_div) {
  FeatureSchema schema;
  schema.names.reserve(kFeatureDim);
  for (const auto& def : kFeatureDefs) schema.names.emplace_back(def.name);
  schema.eps_div = eps_div;
  schema.version = kFeatureSchemaVersion;
  return schema;
}

const char* ablation_name(AblationConfig c) {
  switch (c) {
    case AblationConfig::Full: return "full";
    case AblationConfig::NoD: return "no_d";
    case AblationConfig::NoT: return "no_t";
    case AblationConfig::NoS: return "no_s";
    case AblationConfig::NoInteraction: return "no_interaction";
  }
  throw std::invalid_argument("unknown ablation config");
}

std::optional<AblationConfig> ablation_from_name(const std::string& name) {
  if (name == "full") return AblationConfig::Full;
  if (name == "no_d") return AblationConfig::NoD;
  if (name == "no_t") return AblationConfig::NoT;
  if (name == "no_s") return AblationConfig::NoS;
  if (name == "no_interaction") return AblationConfig::NoInteraction;
  return std::nullopt;
}

std::vector<AblationConfig> all_ablation_configs() {
  return {AblationConfig::Full, AblationConfig::NoD, AblationConfig::NoT,
          AblationConfig::NoS, AblationConfig::NoInteraction};
}

FeatureVector build_features(double abs_d, double t, int sd,
                             const FeatureSchema& schema) {
  if (!std::isfinite(abs_d) || abs_d < 0.0 || abs_d > 2.0)
    throw std::invalid_argument("build_features: abs_d outside [0,2]");
  if (!std::isfinite(t) || t < 0.0 || t > 1.0)
    throw std::invalid_argument("build_features: t outside [0,1]");
  if (sd != 0 && sd != 1)
    throw std::invalid_argument("build_features: sd not in {0,1}");
  if (schema.names.size() != kFeatureDim)
    throw std::invalid_argument("build_features: schema has wrong arity");

  const double D = abs_d;
  const double T = t;
  const double S = static_cast<double>(sd);
  const double eps = schema.eps_div;

  FeatureVector v;
  v.schema_version = schema.version;
  v.values = {
      D,
      T,
      S,
      D + T,
      D - T,
      T - D,
      D * T,
      D / (std::abs(T) + eps),
      T / (std::abs(D) + eps),
      D * D,
      T * T,
      std::sqrt(D),
      std::sqrt(T),
      std::log(1.0 + D),
      std::log(1.0 + T),
      stable_sigmoid(D),
      stable_sigmoid(T),
      S * D,
      S * T,
      S * (D + T),
      S * (D - T),
      1.0 - S,
      (1.0 - S) * D,
      (1.0 - S) * T,
  };
  return sanitize(std::move(v));
}

FeatureVector sanitize(FeatureVector v) {
  for (double& x : v.values) {
    if (!std::isfinite(x)) x = 0.0;
  }
  return v;
}

std::vector<std::string> ablation_mask(const FeatureSchema& schema,
                                       AblationConfig config) {
  if (schema.names.size() != kFeatureDim)
    throw std::invalid_argument("ablation_mask: schema has wrong arity");
  std::vector<std::string> kept;
  for (int i = 0; i < kFeatureDim; ++i) {
    const FeatureDef& def = kFeatureDefs[i];
    bool keep = true;
    switch (config) {
      case AblationConfig::Full: keep = true; break;
      case AblationConfig::NoD: keep = !def.uses_d; break;
      case AblationConfig::NoT: keep = !def.uses_t; break;
      case AblationConfig::NoS: keep = !def.uses_s; break;
      case AblationConfig::NoInteraction: keep = def.base; break;
    }
    if (keep) kept.push_back(schema.names[i]);
  }
  return kept;
}

std::vector<double> select_features(const FeatureVector& v,
                                    const FeatureSchema& schema,
                                    const std::vector<std::string>& mask) {
  if (v.schema_version != schema.version)
    throw std::invalid_argument("select_features: schema version mismatch: " +
                                v.schema_version + " vs " + schema.version);
  if (v.values.size() != schema.names.size())
    throw std::invalid_argument("select_features: vector arity mismatch");
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < schema.names.size(); ++i)
    index.emplace(schema.names[i], i);
  std::vector<double> out;
  out.reserve(mask.size());
  for (const auto& name : mask) {
    auto it = index.find(name);
    if (it == index.end())
      throw std::invalid_argument("select_features: unknown feature: " + name);
    out.push_back(v.values[it->second]);
  }
  return out;
}

}  // namespace wmsar
