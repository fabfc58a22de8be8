#include "tekf/transformation.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "tekf/errors.hpp"

namespace tekf {

Transformation identity_transformation(int n) {
  Transformation out;
  out.T = [n](const Eigen::VectorXd&) { return Eigen::MatrixXd::Identity(n, n); };
  out.T_inv = out.T;
  out.exact_update = [](const Eigen::VectorXd& x_pred, const Eigen::VectorXd& e) {
    return (x_pred + e).eval();
  };
  return out;
}

namespace {

// Picks r rows of N forming a well-conditioned r x r block: per column in
// order, take the largest remaining entry after eliminating previous pivots.
std::vector<int> select_pivot_rows(const Eigen::MatrixXd& N) {
  const int n = static_cast<int>(N.rows());
  const int r = static_cast<int>(N.cols());
  Eigen::MatrixXd W = N;
  std::vector<int> chosen;
  chosen.reserve(r);
  std::vector<bool> used(n, false);
  const double tiny = 1e-12 * std::max(1.0, N.cwiseAbs().maxCoeff());
  for (int c = 0; c < r; ++c) {
    int best = -1;
    double best_abs = tiny;
    for (int i = 0; i < n; ++i) {
      if (!used[i] && std::abs(W(i, c)) > best_abs) {
        best_abs = std::abs(W(i, c));
        best = i;
      }
    }
    if (best < 0)
      throw ConstructionError("kernel basis has no invertible leading block under row permutation");
    used[best] = true;
    chosen.push_back(best);
    for (int i = 0; i < n; ++i) {
      if (!used[i] && W(best, c) != 0.0) {
        W.row(i) -= (W(i, c) / W(best, c)) * W.row(best);
      }
    }
  }
  return chosen;
}

}  // namespace

Transformation transformation_from_basis(const Eigen::MatrixXd& N) {
  const int n = static_cast<int>(N.rows());
  const int r = static_cast<int>(N.cols());
  if (r == 0 || r > n) throw ContractViolation("basis must have 1..n columns");

  // Row order: pivot rows first, the rest in original order.
  const std::vector<int> pivots = select_pivot_rows(N);
  std::vector<int> order = pivots;
  {
    std::vector<bool> used(n, false);
    for (int i : pivots) used[i] = true;
    for (int i = 0; i < n; ++i)
      if (!used[i]) order.push_back(i);
  }

  Eigen::MatrixXd N_perm(n, r);
  for (int i = 0; i < n; ++i) N_perm.row(i) = N.row(order[i]);
  const Eigen::MatrixXd N1 = N_perm.topRows(r);
  const Eigen::MatrixXd N2 = N_perm.bottomRows(n - r);

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(N1);
  const double smin = svd.singularValues().minCoeff();
  const double smax = svd.singularValues().maxCoeff();
  if (smin <= 0.0 || smax / smin > 1e12)
    throw ConstructionError("leading block still singular after row permutation");

  // M = [[N1, 0], [N2, I]];  M^{-1} = [[N1^{-1}, 0], [-N2 N1^{-1}, I]].
  const Eigen::MatrixXd N1_inv = N1.partialPivLu().inverse();
  Eigen::MatrixXd M(n, n);
  M.setZero();
  M.topLeftCorner(r, r) = N1;
  M.bottomLeftCorner(n - r, r) = N2;
  M.bottomRightCorner(n - r, n - r).setIdentity();
  Eigen::MatrixXd M_inv(n, n);
  M_inv.setZero();
  M_inv.topLeftCorner(r, r) = N1_inv;
  M_inv.bottomLeftCorner(n - r, r) = -N2 * N1_inv;
  M_inv.bottomRightCorner(n - r, n - r).setIdentity();

  // Permute back: T = M^{-1} P with (P x)(i) = x(order[i]); T^{-1} = P^T M.
  Eigen::MatrixXd T(n, n), T_inv(n, n);
  for (int k = 0; k < n; ++k) {
    T.col(order[k]) = M_inv.col(k);
    T_inv.row(order[k]) = M.row(k);
  }

  Transformation out;
  out.T = [T](const Eigen::VectorXd&) { return T; };
  out.T_inv = [T_inv](const Eigen::VectorXd&) { return T_inv; };
  // Constant transformation: the implicit update is explicit.
  out.exact_update = [T_inv](const Eigen::VectorXd& x_pred, const Eigen::VectorXd& e) {
    return (x_pred + T_inv * e).eval();
  };
  return out;
}

ConstantFReport verify_constant_F(
    const Transformation& trans, const SystemModel& model,
    const std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& samples,
    double tol) {
  if (samples.size() < 2) throw ContractViolation("need at least 2 samples");
  ConstantFReport out;
  bool first = true;
  for (const auto& [x, u] : samples) {
    const Eigen::VectorXd x_next = model.f(x, u, Eigen::VectorXd::Zero(model.q));
    const Eigen::MatrixXd F_bar = trans.T(x_next) * model.F(x, u) * trans.T_inv(x);
    if (first) {
      out.F_bar = F_bar;
      first = false;
    } else {
      out.max_deviation =
          std::max(out.max_deviation, (F_bar - out.F_bar).cwiseAbs().maxCoeff());
    }
  }
  out.is_constant = out.max_deviation < tol;
  return out;
}

Eigen::VectorXd solve_exact_update(const Transformation& trans,
                                   const Eigen::VectorXd& x_pred,
                                   const Eigen::VectorXd& e) {
  constexpr int kMaxIterations = 50;
  Eigen::VectorXd x = x_pred + trans.T_inv(x_pred) * e;
  double alpha = 1.0;
  double prev_residual = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter <= kMaxIterations; ++iter) {
    const Eigen::VectorXd target = x_pred + trans.T_inv(x) * e;
    const double residual = (target - x).norm();
    if (residual < 1e-12 * (1.0 + x.norm())) return x;
    if (iter == kMaxIterations) break;
    if (residual >= prev_residual) alpha = std::max(0.125, 0.5 * alpha);
    x += alpha * (target - x);
    prev_residual = residual;
  }
  throw ExactUpdateDivergence("exact-update fixed point did not converge in 50 iterations");
}

}  // namespace tekf
