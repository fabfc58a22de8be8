#include "tekf/tt.hpp"

#include <cmath>

#include "tekf/angles.hpp"
#include "tekf/ekf.hpp"
#include "tekf/errors.hpp"

namespace tekf {

namespace {

constexpr double kMinRange = 1e-9;

Eigen::Vector2d delta_to(const Eigen::VectorXd& x, const Landmark& lm) {
  const Eigen::Vector2d d = lm.p_s - x.head<2>();
  if (d.norm() < kMinRange)
    throw DegenerateGeometry("bearing measurement at zero range from landmark");
  return d;
}

}  // namespace

Eigen::Vector3d TargetState::to_vector() const {
  return Eigen::Vector3d(p.x(), p.y(), psi);
}

TargetState TargetState::from_vector(const Eigen::VectorXd& x) {
  if (x.size() != 3) throw ContractViolation("target state length must be 3");
  TargetState out;
  out.p = x.head<2>();
  out.psi = wrap_angle(x(2));
  return out;
}

SystemModel tt_model(const std::vector<Landmark>& landmarks, const TtConfig& cfg) {
  // An empty landmark list is the propagation-only system (p = 0); dt = 0 is
  // the no-op step used by event-driven replay; zero sigmas model a noise-free
  // world for exactness checks.
  if (cfg.sigma_v < 0.0 || cfg.sigma_omega < 0.0 || cfg.sigma_bearing < 0.0 || cfg.dt < 0.0)
    throw ContractViolation("invalid noise configuration");

  const double dt = cfg.dt;
  const int p_dim = static_cast<int>(landmarks.size());

  SystemModel model;
  model.n = 3;
  model.q = 3;
  model.p = p_dim;

  model.f = [dt](const Eigen::VectorXd& x, const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
    Eigen::VectorXd out(3);
    out.head<2>() = x.head<2>() + rot2(x(2)) * (u.head<2>() + v.head<2>()) * dt;
    out(2) = x(2) + (u(2) + v(2)) * dt;
    return out;
  };

  model.F = [dt](const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
    Eigen::MatrixXd F = Eigen::MatrixXd::Identity(3, 3);
    F.block<2, 1>(0, 2) = kJ * rot2(x(2)) * u.head<2>() * dt;
    return F;
  };

  model.G = [dt](const Eigen::VectorXd& x, const Eigen::VectorXd&) {
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(3, 3);
    G.block<2, 2>(0, 0) = rot2(x(2)) * dt;
    G(2, 2) = dt;
    return G;
  };

  model.h = [landmarks](const Eigen::VectorXd& x, const Eigen::VectorXd& w) {
    Eigen::VectorXd y(landmarks.size());
    for (size_t i = 0; i < landmarks.size(); ++i) {
      const Eigen::Vector2d d = delta_to(x, landmarks[i]);
      y(i) = wrap_angle(std::atan2(d.y(), d.x()) - x(2) + w(i));
    }
    return y;
  };

  model.H = [landmarks](const Eigen::VectorXd& x) {
    Eigen::MatrixXd H(landmarks.size(), 3);
    for (size_t i = 0; i < landmarks.size(); ++i) {
      const Eigen::Vector2d d = delta_to(x, landmarks[i]);
      const double r2 = d.squaredNorm();
      H(i, 0) = d.y() / r2;
      H(i, 1) = -d.x() / r2;
      H(i, 2) = -1.0;
    }
    return H;
  };

  model.D = [p_dim](const Eigen::VectorXd&) {
    return Eigen::MatrixXd::Identity(p_dim, p_dim);
  };

  model.residual = [](const Eigen::VectorXd& measured, const Eigen::VectorXd& predicted) {
    Eigen::VectorXd r(measured.size());
    for (Eigen::Index i = 0; i < r.size(); ++i)
      r(i) = wrap_angle(measured(i) - predicted(i));
    return r;
  };

  model.normalize = [](Eigen::VectorXd x) {
    x(2) = wrap_angle(x(2));
    return x;
  };

  return model;
}

NoiseSpec tt_noise_spec(const TtConfig& cfg, int n_landmarks) {
  NoiseSpec noise;
  noise.Q = Eigen::Vector3d(cfg.sigma_v * cfg.sigma_v, cfg.sigma_v * cfg.sigma_v,
                            cfg.sigma_omega * cfg.sigma_omega)
                .asDiagonal();
  noise.R = cfg.sigma_bearing * cfg.sigma_bearing *
            Eigen::MatrixXd::Identity(n_landmarks, n_landmarks);
  return noise;
}

Eigen::Vector3d tt_single_landmark_basis(const Eigen::VectorXd& x, const Landmark& lm) {
  Eigen::Vector3d b;
  b.head<2>() = kJ * (x.head<2>() - lm.p_s);
  b(2) = 1.0;
  return b;
}

Transformation tt_transform() {
  Transformation out;
  out.T = [](const Eigen::VectorXd& x) {
    Eigen::MatrixXd T = Eigen::MatrixXd::Identity(3, 3);
    T.block<2, 1>(0, 2) = -kJ * x.head<2>();
    return T;
  };
  out.T_inv = [](const Eigen::VectorXd& x) {
    Eigen::MatrixXd T_inv = Eigen::MatrixXd::Identity(3, 3);
    T_inv.block<2, 1>(0, 2) = kJ * x.head<2>();
    return T_inv;
  };
  out.exact_update = [](const Eigen::VectorXd& x_pred, const Eigen::VectorXd& e) {
    // Same block solve as one fleet robot: psi += eps, p = (I - eps J)^{-1}(p + e_p).
    const double eps = e(2);
    Eigen::Matrix2d A;
    A << 1.0, -eps, eps, 1.0;
    Eigen::VectorXd x(3);
    x.head<2>() = A / (1.0 + eps * eps) * (x_pred.head<2>() + e.head<2>());
    x(2) = x_pred(2) + eps;
    return x;
  };
  // Same collapse as the fleet case: the transformed propagation Jacobian is I.
  out.constant_F = Eigen::MatrixXd::Identity(3, 3);
  return out;
}

GaussianBelief dead_reckoning_step(const GaussianBelief& state, const Eigen::VectorXd& u,
                                   const TtConfig& cfg) {
  return ekf_predict(state, tt_model({}, cfg), u, tt_noise_spec(cfg, 0));
}

}  // namespace tekf
