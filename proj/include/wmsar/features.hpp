#pragma once

#include <optional>
#include <string>
#include <vector>

namespace wmsar {

inline constexpr int kFeatureDim = 24;
inline constexpr const char* kFeatureSchemaVersion = "wmsar.features.v1";

// Frozen feature layout: names in emission order plus the division guard.
// Models store the version string; loading a vector or model with a
// different version fails loudly instead of silently misaligning columns.
struct FeatureSchema {
  std::vector<std::string> names;
  double eps_div = 1e-6;
  std::string version = kFeatureSchemaVersion;
};

FeatureSchema default_feature_schema(double eps_div = 1e-6);

struct FeatureVector {
  std::vector<double> values;
  std::string schema_version;
};

enum class AblationConfig { Full, NoD, NoT, NoS, NoInteraction };

const char* ablation_name(AblationConfig c);
std::optional<AblationConfig> ablation_from_name(const std::string& name);
std::vector<AblationConfig> all_ablation_configs();

// Emit the 24 features from the three scalars. abs_d in [0, 2], t in [0, 1],
// sd in {0, 1}. Output is sanitized: any non-finite entry becomes 0.
FeatureVector build_features(double abs_d, double t, int sd,
                             const FeatureSchema& schema);

// Replace non-finite entries with exactly 0.0.
FeatureVector sanitize(FeatureVector v);

// Names retained under the given ablation, in schema order.
std::vector<std::string> ablation_mask(const FeatureSchema& schema,
                                       AblationConfig config);

// Column-select v down to the masked names. Mask entries must exist in the
// schema and the vector's version must match.
std::vector<double> select_features(const FeatureVector& v,
                                    const FeatureSchema& schema,
                                    const std::vector<std::string>& mask);

}  // namespace wmsar
