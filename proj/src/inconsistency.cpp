#include "wmsar/inconsistency.hpp"

#include <cmath>
#include <stdexcept>

namespace wmsar {

int sgn_eps(double x, SignEpsilon eps) {
  if (!std::isfinite(x)) throw std::invalid_argument("sgn_eps: x not finite");
  if (!std::isfinite(eps.epsilon) || eps.epsilon <= 0.0)
    throw std::invalid_argument("sgn_eps: epsilon must be positive");
  if (x > eps.epsilon) return 1;
  if (x < -eps.epsilon) return -1;
  return 0;
}

double inconsistency_d(double m, double e) {
  if (!std::isfinite(m) || std::abs(m) > 1.0)
    throw std::invalid_argument("inconsistency_d: m outside [-1,1]");
  if (!std::isfinite(e) || std::abs(e) > 1.0)
    throw std::invalid_argument("inconsistency_d: e outside [-1,1]");
  return m - e;
}

int sign_disagreement(double m, double e, SignEpsilon eps) {
  return sgn_eps(m, eps) != sgn_eps(e, eps) ? 1 : 0;
}

InconsistencySignal make_inconsistency(double m, double e, SignEpsilon eps) {
  InconsistencySignal s;
  s.d = inconsistency_d(m, e);
  s.abs_d = std::abs(s.d);
  s.sd = sign_disagreement(m, e, eps);
  return s;
}

}  // namespace wmsar
