#include "tekf/ekf.hpp"

#include <Eigen/Eigenvalues>

#include "tekf/errors.hpp"

namespace tekf {

namespace {

constexpr double kConditionLimit = 1e12;

void require(bool ok, const char* what) {
  if (!ok) throw ContractViolation(what);
}

void check_belief(const GaussianBelief& b, const SystemModel& model) {
  require(b.mean.size() == model.n, "belief mean length does not match model state dimension");
  require(b.cov.rows() == model.n && b.cov.cols() == model.n,
          "belief covariance does not match model state dimension");
  if (!belief_valid(b)) throw ContractViolation("belief covariance not symmetric PSD");
}

Eigen::VectorXd normalized(const SystemModel& model, Eigen::VectorXd x) {
  return model.normalize ? model.normalize(std::move(x)) : x;
}

}  // namespace

bool belief_valid(const GaussianBelief& b, double sym_tol, double eig_floor) {
  if (b.mean.size() != b.cov.rows() || b.cov.rows() != b.cov.cols()) return false;
  if (!b.mean.allFinite() || !b.cov.allFinite()) return false;
  if ((b.cov - b.cov.transpose()).cwiseAbs().maxCoeff() > sym_tol) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(symmetrized(b.cov),
                                                     Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff() >= eig_floor;
}

Eigen::VectorXd propagate_mean(const SystemModel& model, const Eigen::VectorXd& x,
                               const Eigen::VectorXd& u) {
  require(x.size() == model.n, "state length does not match model");
  return model.f(x, u, Eigen::VectorXd::Zero(model.q));
}

GaussianBelief ekf_predict(const GaussianBelief& belief, const SystemModel& model,
                           const Eigen::VectorXd& u, const NoiseSpec& noise,
                           const EkfOptions& opt, FejCache* fej) {
  check_belief(belief, model);
  require(noise.Q.rows() == model.q && noise.Q.cols() == model.q,
          "Q does not match model noise dimension");

  GaussianBelief out;
  out.mean = normalized(model, propagate_mean(model, belief.mean, u));

  const bool use_fej = opt.policy == LinearizationPolicy::FirstEstimates && fej != nullptr;
  const Eigen::VectorXd& x_lin =
      (use_fej && fej->first_prediction) ? *fej->first_prediction : belief.mean;
  const Eigen::MatrixXd F = model.F(x_lin, u);
  const Eigen::MatrixXd G = model.G(x_lin, u);
  out.cov = symmetrized(F * belief.cov * F.transpose() + G * noise.Q * G.transpose());

  if (use_fej && !fej->first_prediction) fej->first_prediction = out.mean;
  return out;
}

GaussianBelief ekf_update(const GaussianBelief& belief, const SystemModel& model,
                          const Eigen::VectorXd& y, const NoiseSpec& noise,
                          const EkfOptions& opt, const FejCache* fej) {
  check_belief(belief, model);
  if (model.p == 0) return belief;
  require(y.size() == model.p, "measurement length does not match model");
  require(noise.R.rows() == model.p && noise.R.cols() == model.p,
          "R does not match model measurement dimension");

  const bool use_fej = opt.policy == LinearizationPolicy::FirstEstimates && fej != nullptr &&
                       fej->first_prediction.has_value();
  const Eigen::VectorXd& x_lin = use_fej ? *fej->first_prediction : belief.mean;
  const Eigen::MatrixXd H = model.H(x_lin);
  const Eigen::MatrixXd D = model.D(x_lin);

  const Eigen::MatrixXd S =
      symmetrized(H * belief.cov * H.transpose() + D * noise.R * D.transpose());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(S);
  const double smin = svd.singularValues().minCoeff();
  const double smax = svd.singularValues().maxCoeff();
  if (smin <= 0.0 || smax / smin > kConditionLimit)
    throw SingularInnovation("innovation covariance condition number exceeds 1e12");

  const Eigen::MatrixXd PHt = belief.cov * H.transpose();
  const Eigen::MatrixXd K = S.llt().solve(PHt.transpose()).transpose();

  const Eigen::VectorXd r =
      model.residual(y, model.h(belief.mean, Eigen::VectorXd::Zero(model.p)));

  GaussianBelief out;
  out.mean = normalized(model, belief.mean + K * r);
  const Eigen::MatrixXd IKH =
      Eigen::MatrixXd::Identity(model.n, model.n) - K * H;
  if (opt.joseph_form) {
    out.cov = symmetrized(IKH * belief.cov * IKH.transpose() +
                          K * D * noise.R * D.transpose() * K.transpose());
  } else {
    out.cov = symmetrized(IKH * belief.cov);
  }
  return out;
}

}  // namespace tekf
