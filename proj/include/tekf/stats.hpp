#pragma once

namespace tekf {

// Inverse CDF of the chi-square distribution with dof degrees of freedom,
// evaluated at probability prob in (0, 1). Used for NEES confidence bands.
double chi_square_quantile(double dof, double prob);

// Two-sided band for the per-step average NEES of `trials` independent
// d-dimensional errors: [lo, hi] = [chi2inv(alpha/2), chi2inv(1-alpha/2)] / trials
// for the chi-square with trials*d degrees of freedom.
struct NeesBand {
  double lo = 0.0;
  double hi = 0.0;
};

NeesBand nees_band(int trials, int dim, double alpha = 0.05);

}  // namespace tekf
