#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "tekf/system_model.hpp"

namespace tekf {

// Invertible state-dependent change of error-state coordinates. T_inv is
// supplied analytically wherever a closed form exists (all transformations here
// have one); it is never obtained by numerical inversion on the filter path.
// exact_update, when set, solves x = x_pred + T_inv(x) e in closed form and is
// cross-checked against the fixed-point solver in tests.
// constant_F, when set, is the state-independent transformed propagation
// Jacobian T(f(x,u,0)) F(x,u) T_inv(x); the transformed-coordinates filter then
// skips the triple product. Setters are responsible for its correctness and it
// is verified against verify_constant_F in tests.
struct Transformation {
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> T;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> T_inv;
  std::function<Eigen::VectorXd(const Eigen::VectorXd& x_pred, const Eigen::VectorXd& e)>
      exact_update;
  std::optional<Eigen::MatrixXd> constant_F;
};

// Both transformed filters reduce to the classical EKF under this one.
Transformation identity_transformation(int n);

// Construction from a kernel basis N (n x r) evaluated at one state: row-permute
// so the leading r x r block is well conditioned, invert [[N1, 0], [N2, I]], and
// permute back. The result is a constant transformation with T * N = [I_r; 0].
// Throws ConstructionError when no permutation yields an invertible leading block.
Transformation transformation_from_basis(const Eigen::MatrixXd& N);

// Evaluates F_bar = T(f(x,u,0)) * F(x,u) * T_inv(x) at each sample and reports
// whether all values coincide (pairwise max-norm deviation below tol).
struct ConstantFReport {
  bool is_constant = false;
  double max_deviation = 0.0;
  Eigen::MatrixXd F_bar;  // value at the first sample
};
ConstantFReport verify_constant_F(
    const Transformation& trans, const SystemModel& model,
    const std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& samples,
    double tol = 1e-9);

// Damped fixed-point solve of x = x_pred + T_inv(x) e, seeded at the approximate
// update x_pred + T_inv(x_pred) e. Converged when the equation residual drops
// below 1e-12 * (1 + ||x||); throws ExactUpdateDivergence after 50 iterations.
Eigen::VectorXd solve_exact_update(const Transformation& trans,
                                   const Eigen::VectorXd& x_pred,
                                   const Eigen::VectorXd& e);

}  // namespace tekf
