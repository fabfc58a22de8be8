#pragma once

#include <Eigen/Dense>
#include <vector>

namespace tekf {

// Stacked local observability matrix over a window of l steps starting at the
// anchor: row block i = H_{k+i} * F_{k+i-1} * ... * F_k (block 0 is H_k alone).
struct ObservabilityMatrix {
  Eigen::MatrixXd rows;
  int window = 0;       // l = number of F factors
  int anchor_step = 0;  // k
};

// Orthonormal basis of a subspace together with the threshold that produced it.
// Invariants: basis^T basis = I to 1e-10; for a kernel basis of M every column v
// satisfies ||M v|| <= tol * sigma_max(M).
struct SubspaceBasis {
  Eigen::MatrixXd basis;  // n x r, orthonormal columns (r may be 0)
  double tol = 0.0;
};

// Requires |H_seq| = |F_seq| + 1; all blocks must share the state dimension.
ObservabilityMatrix build_observability_matrix(const std::vector<Eigen::MatrixXd>& F_seq,
                                               const std::vector<Eigen::MatrixXd>& H_seq,
                                               int anchor_step = 0);

// Numerical null space via SVD; singular values <= tol * sigma_max count as zero.
SubspaceBasis kernel_basis(const Eigen::MatrixXd& M, double tol = 1e-8);

// Span(B) inside Span(A): every column of B projects onto A with residual < tol.
bool subspace_contains(const SubspaceBasis& A, const SubspaceBasis& B, double tol);

// Mutual containment of the two spans.
bool subspace_equal(const SubspaceBasis& A, const SubspaceBasis& B, double tol);

// Principal angles (radians, ascending) between the two spans.
std::vector<double> principal_angles(const SubspaceBasis& A, const SubspaceBasis& B);

// Kernel dimensions of both systems plus the directions the estimator lost:
// the orthogonal complement of the estimator kernel inside the nominal kernel.
struct MismatchReport {
  int dim_nominal = 0;
  int dim_estimator = 0;
  SubspaceBasis lost_directions;
};

MismatchReport mismatch_report(const ObservabilityMatrix& nominal,
                               const ObservabilityMatrix& estimator, double tol = 1e-8);

}  // namespace tekf
