#pragma once

#include "wmsar/signal_model.hpp"

namespace wmsar {

// Half-width of the neutral band for the banded sign function.
struct SignEpsilon {
  double epsilon = 0.05;
};

// Banded sign: +1 if x > eps, -1 if x < -eps, 0 otherwise.
// Throws std::invalid_argument on non-finite x or epsilon <= 0.
int sgn_eps(double x, SignEpsilon eps = {});

// Raw prediction error m - e. Inputs must lie in [-1, 1].
double inconsistency_d(double m, double e);

// 1 iff the banded signs of m and e differ (neutral vs signed counts).
int sign_disagreement(double m, double e, SignEpsilon eps = {});

InconsistencySignal make_inconsistency(double m, double e, SignEpsilon eps = {});

}  // namespace wmsar
