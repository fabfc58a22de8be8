#pragma once

#include <Eigen/Dense>

namespace tekf {

// (M + M^T)/2. Covariance writes go through this so asymmetry cannot accumulate
// over long runs.
inline Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& M) {
  return 0.5 * (M + M.transpose());
}

// Mean and covariance of the stacked state.
// Invariants: mean length equals the covariance dimension; cov is symmetric to
// 1e-10 and has no eigenvalue below -1e-9.
struct GaussianBelief {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

// Checks the invariants above. Filters reject input beliefs that fail it.
bool belief_valid(const GaussianBelief& b, double sym_tol = 1e-10,
                  double eig_floor = -1e-9);

}  // namespace tekf
