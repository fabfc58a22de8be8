#include "oracles.hpp"

#include <random>

#include "tekf/angles.hpp"

namespace tekf::oracle {

GaussianBelief information_update(const GaussianBelief& prior, const Eigen::MatrixXd& H,
                                  const Eigen::MatrixXd& S_R, const Eigen::VectorXd& r) {
  const Eigen::MatrixXd P_inv = prior.cov.inverse();
  const Eigen::MatrixXd R_inv = S_R.inverse();
  const Eigen::MatrixXd info = P_inv + H.transpose() * R_inv * H;
  GaussianBelief post;
  post.cov = symmetrized(info.inverse());
  // r is the residual about the prior mean, so the information-form data term
  // uses the equivalent absolute measurement r + H x.
  post.mean = post.cov * (P_inv * prior.mean +
                          H.transpose() * R_inv * (r + H * prior.mean));
  return post;
}

Scalar scalar_kalman_step(Scalar prior, double f, double g2q, double h, double r2,
                          double y) {
  const double x_pred = f * prior.x;
  const double p_pred = f * prior.p * f + g2q;
  const double s = h * p_pred * h + r2;
  const double k = p_pred * h / s;
  Scalar post;
  post.x = x_pred + k * (y - h * x_pred);
  post.p = (1.0 - k * h) * p_pred;
  return post;
}

Eigen::MatrixXd fd_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& fn,
                            const Eigen::VectorXd& x) {
  const Eigen::VectorXd y0 = fn(x);
  Eigen::MatrixXd J(y0.size(), x.size());
  for (int i = 0; i < x.size(); ++i) {
    const double step = 1e-6 * std::max(1.0, std::abs(x(i)));
    Eigen::VectorXd xp = x, xm = x;
    xp(i) += step;
    xm(i) -= step;
    J.col(i) = (fn(xp) - fn(xm)) / (2.0 * step);
  }
  return J;
}

double jacobian_mismatch(const Eigen::MatrixXd& analytic, const Eigen::MatrixXd& fd) {
  const double scale = std::max(1.0, fd.cwiseAbs().maxCoeff());
  return (analytic - fd).cwiseAbs().maxCoeff() / scale;
}

Eigen::MatrixXd direct_observability_rows(const std::vector<Eigen::MatrixXd>& F_seq,
                                          const std::vector<Eigen::MatrixXd>& H_seq) {
  Eigen::Index total = 0;
  for (const Eigen::MatrixXd& H : H_seq) total += H.rows();
  const Eigen::Index n = H_seq.front().cols();
  Eigen::MatrixXd O(total, n);
  Eigen::Index row = 0;
  for (std::size_t i = 0; i < H_seq.size(); ++i) {
    Eigen::MatrixXd chain = Eigen::MatrixXd::Identity(n, n);  // F_{i-1} ... F_0
    for (std::size_t j = 0; j < i; ++j) chain = F_seq[j] * chain;
    O.middleRows(row, H_seq[i].rows()) = H_seq[i] * chain;
    row += H_seq[i].rows();
  }
  return O;
}

Eigen::VectorXd random_vector(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = gauss(rng);
  return v;
}

Eigen::MatrixXd random_matrix(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd M(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) M(i, j) = gauss(rng);
  return M;
}

Eigen::MatrixXd random_spd(int n, std::uint64_t seed) {
  const Eigen::MatrixXd A = random_matrix(n, n, seed);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullU);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> eig(0.5, 1.5);
  Eigen::VectorXd d(n);
  for (int i = 0; i < n; ++i) d(i) = eig(rng);
  const Eigen::MatrixXd U = svd.matrixU();
  return symmetrized(U * d.asDiagonal() * U.transpose());
}

Eigen::VectorXd random_fleet_state(int m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> upos(-5.0, 5.0);
  std::uniform_real_distribution<double> uang(-kPi, kPi);
  Eigen::VectorXd x(3 * m);
  for (int i = 0; i < m; ++i) {
    x(3 * i) = upos(rng);
    x(3 * i + 1) = upos(rng);
    x(3 * i + 2) = wrap_angle(uang(rng));
  }
  return x;
}

}  // namespace tekf::oracle
