#include "tekf/stats.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include "tekf/errors.hpp"

namespace tekf {

double chi_square_quantile(double dof, double prob) {
  if (!(dof > 0.0)) throw ContractViolation("chi_square_quantile: dof must be positive");
  if (!(prob > 0.0 && prob < 1.0))
    throw ContractViolation("chi_square_quantile: prob must lie in (0, 1)");
  return boost::math::quantile(boost::math::chi_squared(dof), prob);
}

NeesBand nees_band(int trials, int dim, double alpha) {
  if (trials < 1 || dim < 1) throw ContractViolation("nees_band: trials and dim must be positive");
  const double dof = static_cast<double>(trials) * dim;
  NeesBand band;
  band.lo = chi_square_quantile(dof, alpha / 2.0) / trials;
  band.hi = chi_square_quantile(dof, 1.0 - alpha / 2.0) / trials;
  return band;
}

}  // namespace tekf
