#include "dive/special.hpp"

#include <boost/math/special_functions/erf.hpp>

#include "dive/errors.hpp"
#include "dive/rng.hpp"

namespace dive {

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("normal_quantile: p must lie in (0, 1)");
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double Rng::normal() { return normal_quantile(uniform()); }

}  // namespace dive
