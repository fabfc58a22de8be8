#include "tekf/tekf.hpp"

#include "tekf/errors.hpp"

namespace tekf {

namespace {

constexpr double kConditionLimit = 1e12;

void require(bool ok, const char* what) {
  if (!ok) throw ContractViolation(what);
}

Eigen::VectorXd normalized(const SystemModel& model, Eigen::VectorXd x) {
  return model.normalize ? model.normalize(std::move(x)) : x;
}

// Shared gain computation; S is checked against the condition limit first.
Eigen::MatrixXd gain(const Eigen::MatrixXd& P, const Eigen::MatrixXd& H,
                     const Eigen::MatrixXd& D, const Eigen::MatrixXd& R) {
  const Eigen::MatrixXd S = symmetrized(H * P * H.transpose() + D * R * D.transpose());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(S);
  const double smin = svd.singularValues().minCoeff();
  const double smax = svd.singularValues().maxCoeff();
  if (smin <= 0.0 || smax / smin > kConditionLimit)
    throw SingularInnovation("innovation covariance condition number exceeds 1e12");
  const Eigen::MatrixXd PHt = P * H.transpose();
  return S.llt().solve(PHt.transpose()).transpose();
}

// Solves x = x_pred + T_inv(x) e, preferring a registered closed form.
Eigen::VectorXd exact_state(const Transformation& trans, const Eigen::VectorXd& x_pred,
                            const Eigen::VectorXd& e) {
  if (trans.exact_update) return trans.exact_update(x_pred, e);
  return solve_exact_update(trans, x_pred, e);
}

}  // namespace

Tekf1State tekf1_init(const GaussianBelief& prior, const Transformation& trans) {
  const Eigen::MatrixXd T0 = trans.T(prior.mean);
  Tekf1State out;
  out.mean = prior.mean;
  out.cov_bar = symmetrized(T0 * prior.cov * T0.transpose());
  return out;
}

Tekf1State tekf1_predict(const Tekf1State& state, const SystemModel& model,
                         const Transformation& trans, const Eigen::VectorXd& u,
                         const NoiseSpec& noise) {
  require(state.mean.size() == model.n, "state length does not match model");

  Tekf1State out;
  out.mean = normalized(model, model.f(state.mean, u, Eigen::VectorXd::Zero(model.q)));

  const Eigen::MatrixXd T_pred = trans.T(out.mean);
  const Eigen::MatrixXd G_bar = T_pred * model.G(state.mean, u);
  const Eigen::MatrixXd noise_term = G_bar * noise.Q * G_bar.transpose();
  // A constant identity propagation Jacobian is the payoff of the
  // block-diagonal transformations: the whole covariance sandwich drops out.
  if (trans.constant_F && trans.constant_F->isIdentity(0.0)) {
    out.cov_bar = symmetrized(state.cov_bar + noise_term);
    return out;
  }
  const Eigen::MatrixXd F_bar =
      trans.constant_F ? *trans.constant_F
                       : T_pred * model.F(state.mean, u) * trans.T_inv(state.mean);
  out.cov_bar = symmetrized(F_bar * state.cov_bar * F_bar.transpose() + noise_term);
  return out;
}

Tekf1State tekf1_update(const Tekf1State& state, const SystemModel& model,
                        const Transformation& trans, const Eigen::VectorXd& y,
                        const NoiseSpec& noise, UpdateMode mode) {
  require(state.mean.size() == model.n, "state length does not match model");
  if (model.p == 0) return state;
  require(y.size() == model.p, "measurement length does not match model");

  const Eigen::VectorXd& x_pred = state.mean;
  const Eigen::MatrixXd T_inv_pred = trans.T_inv(x_pred);
  const Eigen::MatrixXd H_bar = model.H(x_pred) * T_inv_pred;
  const Eigen::MatrixXd D = model.D(x_pred);
  const Eigen::MatrixXd K_bar = gain(state.cov_bar, H_bar, D, noise.R);

  const Eigen::VectorXd r =
      model.residual(y, model.h(x_pred, Eigen::VectorXd::Zero(model.p)));
  const Eigen::VectorXd e = K_bar * r;

  Tekf1State out;
  switch (mode) {
    case UpdateMode::Exact:
      out.mean = normalized(model, exact_state(trans, x_pred, e));
      break;
    case UpdateMode::Approximate:
      out.mean = normalized(model, x_pred + T_inv_pred * e);
      break;
  }
  out.cov_bar = symmetrized(state.cov_bar - K_bar * (H_bar * state.cov_bar));
  return out;
}

Tekf2State tekf2_step(const Tekf2State& state, const SystemModel& model,
                      const Transformation& trans, const Eigen::VectorXd& u,
                      const Eigen::VectorXd& y, const NoiseSpec& noise, UpdateMode mode) {
  require(state.belief.mean.size() == model.n, "state length does not match model");

  // Classical prediction in original coordinates.
  GaussianBelief pred;
  pred.mean = normalized(model, model.f(state.belief.mean, u, Eigen::VectorXd::Zero(model.q)));
  const Eigen::MatrixXd F = model.F(state.belief.mean, u);
  const Eigen::MatrixXd G = model.G(state.belief.mean, u);
  pred.cov =
      symmetrized(F * state.belief.cov * F.transpose() + G * noise.Q * G.transpose());

  Tekf2State out;
  if (model.p == 0) {
    out.belief = pred;
    return out;
  }
  require(y.size() == model.p, "measurement length does not match model");

  const Eigen::MatrixXd H = model.H(pred.mean);
  const Eigen::MatrixXd D = model.D(pred.mean);
  const Eigen::MatrixXd K = gain(pred.cov, H, D, noise.R);
  const Eigen::VectorXd r =
      model.residual(y, model.h(pred.mean, Eigen::VectorXd::Zero(model.p)));

  switch (mode) {
    case UpdateMode::Exact: {
      // Same implicit equation as T-EKF 1: the transformed correction is
      // e = T(x_pred) K r, and dT K r = T_inv(x_new) e.
      const Eigen::VectorXd e = trans.T(pred.mean) * (K * r);
      out.belief.mean = normalized(model, exact_state(trans, pred.mean, e));
      break;
    }
    case UpdateMode::Approximate:
      out.belief.mean = normalized(model, pred.mean + K * r);
      break;
  }

  // Covariance correction with dT from whichever state the branch produced.
  const Eigen::MatrixXd S_hat = pred.cov - K * (H * pred.cov);
  const Eigen::MatrixXd dT = trans.T_inv(out.belief.mean) * trans.T(pred.mean);
  out.belief.cov = symmetrized(dT * S_hat * dT.transpose());
  return out;
}

Eigen::MatrixXd tekf1_cov_original(const Tekf1State& state, const Transformation& trans) {
  const Eigen::MatrixXd T_inv = trans.T_inv(state.mean);
  return symmetrized(T_inv * state.cov_bar * T_inv.transpose());
}

}  // namespace tekf
