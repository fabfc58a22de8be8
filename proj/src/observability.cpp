#include "tekf/observability.hpp"

#include <algorithm>
#include <cmath>

#include "tekf/errors.hpp"

namespace tekf {

ObservabilityMatrix build_observability_matrix(const std::vector<Eigen::MatrixXd>& F_seq,
                                               const std::vector<Eigen::MatrixXd>& H_seq,
                                               int anchor_step) {
  if (H_seq.size() != F_seq.size() + 1)
    throw ContractViolation("need |H_seq| = |F_seq| + 1");
  if (H_seq.empty()) throw ContractViolation("empty H sequence");
  const Eigen::Index n = H_seq.front().cols();
  Eigen::Index total_rows = 0;
  for (const auto& H : H_seq) {
    if (H.cols() != n) throw ContractViolation("H block state dimension mismatch");
    total_rows += H.rows();
  }
  for (const auto& F : F_seq)
    if (F.rows() != n || F.cols() != n)
      throw ContractViolation("F block state dimension mismatch");

  ObservabilityMatrix out;
  out.window = static_cast<int>(F_seq.size());
  out.anchor_step = anchor_step;
  out.rows.resize(total_rows, n);

  // Running chain F_{k+i-1} ... F_k premultiplied into each H block.
  Eigen::MatrixXd chain = Eigen::MatrixXd::Identity(n, n);
  Eigen::Index row = 0;
  for (size_t i = 0; i < H_seq.size(); ++i) {
    if (i > 0) chain = F_seq[i - 1] * chain;
    out.rows.middleRows(row, H_seq[i].rows()) = H_seq[i] * chain;
    row += H_seq[i].rows();
  }
  return out;
}

SubspaceBasis kernel_basis(const Eigen::MatrixXd& M, double tol) {
  if (M.size() == 0) throw ContractViolation("empty matrix has no kernel basis");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double smax = sv.size() > 0 ? sv(0) : 0.0;
  const double cut = tol * smax;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > cut) ++rank;
  const Eigen::Index n = M.cols();
  SubspaceBasis out;
  out.tol = tol;
  out.basis = svd.matrixV().rightCols(n - rank);
  return out;
}

bool subspace_contains(const SubspaceBasis& A, const SubspaceBasis& B, double tol) {
  if (A.basis.rows() != B.basis.rows())
    throw ContractViolation("subspace ambient dimension mismatch");
  if (B.basis.cols() == 0) return true;
  if (A.basis.cols() == 0) return false;
  // Columns of B are unit length, so the projection residual is absolute.
  const Eigen::MatrixXd resid = B.basis - A.basis * (A.basis.transpose() * B.basis);
  return resid.colwise().norm().maxCoeff() < tol;
}

bool subspace_equal(const SubspaceBasis& A, const SubspaceBasis& B, double tol) {
  return A.basis.cols() == B.basis.cols() && subspace_contains(A, B, tol) &&
         subspace_contains(B, A, tol);
}

std::vector<double> principal_angles(const SubspaceBasis& A, const SubspaceBasis& B) {
  if (A.basis.rows() != B.basis.rows())
    throw ContractViolation("subspace ambient dimension mismatch");
  const Eigen::Index r = std::min(A.basis.cols(), B.basis.cols());
  if (r == 0) return {};
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A.basis.transpose() * B.basis);
  std::vector<double> angles;
  angles.reserve(r);
  for (Eigen::Index i = 0; i < r; ++i) {
    const double c = std::clamp(svd.singularValues()(i), -1.0, 1.0);
    angles.push_back(std::acos(c));
  }
  std::sort(angles.begin(), angles.end());
  return angles;
}

MismatchReport mismatch_report(const ObservabilityMatrix& nominal,
                               const ObservabilityMatrix& estimator, double tol) {
  if (nominal.rows.cols() != estimator.rows.cols())
    throw ContractViolation("observability matrices have different state dimensions");
  MismatchReport out;
  const SubspaceBasis ker_nom = kernel_basis(nominal.rows, tol);
  const SubspaceBasis ker_est = kernel_basis(estimator.rows, tol);
  out.dim_nominal = static_cast<int>(ker_nom.basis.cols());
  out.dim_estimator = static_cast<int>(ker_est.basis.cols());

  // Project the nominal kernel onto the complement of the estimator kernel and
  // keep the directions that survive.
  Eigen::MatrixXd resid = ker_nom.basis;
  if (ker_est.basis.cols() > 0)
    resid -= ker_est.basis * (ker_est.basis.transpose() * ker_nom.basis);
  out.lost_directions.tol = tol;
  if (resid.size() == 0 || resid.norm() == 0.0) {
    out.lost_directions.basis.resize(nominal.rows.cols(), 0);
    return out;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(resid, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  const double cut = std::max(tol * (sv.size() ? sv(0) : 0.0), tol);
  Eigen::Index keep = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > cut) ++keep;
  out.lost_directions.basis = svd.matrixU().leftCols(keep);
  return out;
}

}  // namespace tekf
