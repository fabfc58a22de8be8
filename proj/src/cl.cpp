#include "tekf/cl.hpp"

#include "tekf/angles.hpp"
#include "tekf/errors.hpp"

namespace tekf {

namespace {

// (I - eps J)^{-1} = [[1, -eps], [eps, 1]] / (1 + eps^2); always invertible.
Eigen::Matrix2d solve_position_factor(double eps) {
  Eigen::Matrix2d A;
  A << 1.0, -eps, eps, 1.0;
  return A / (1.0 + eps * eps);
}

void check_pairs(int m, const std::vector<RobotPair>& pairs) {
  for (const auto& [i, j] : pairs) {
    if (i < 0 || i >= m || j < 0 || j >= m || i == j)
      throw ContractViolation("invalid measurement pair");
  }
}

}  // namespace

Eigen::VectorXd FleetState::to_vector() const {
  Eigen::VectorXd x(3 * robot_count());
  for (int i = 0; i < robot_count(); ++i) {
    x.segment<2>(3 * i) = poses[i].p;
    x(3 * i + 2) = poses[i].psi;
  }
  return x;
}

FleetState FleetState::from_vector(const Eigen::VectorXd& x) {
  if (x.size() % 3 != 0) throw ContractViolation("fleet state length must be 3m");
  FleetState out;
  out.poses.resize(x.size() / 3);
  for (int i = 0; i < out.robot_count(); ++i) {
    out.poses[i].p = x.segment<2>(3 * i);
    out.poses[i].psi = wrap_angle(x(3 * i + 2));
  }
  return out;
}

std::vector<RobotPair> cl_all_pairs(int m) {
  std::vector<RobotPair> pairs;
  pairs.reserve(static_cast<size_t>(m) * (m - 1));
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      if (i != j) pairs.emplace_back(i, j);
  return pairs;
}

SystemModel cl_model(int m, const ClNoiseConfig& cfg) {
  return cl_model(m, cfg, cl_all_pairs(m));
}

SystemModel cl_model(int m, const ClNoiseConfig& cfg, const std::vector<RobotPair>& pairs) {
  if (m < 2) throw ContractViolation("need at least 2 robots");
  // dt = 0 is legal: it makes the step an exact no-op (F = I, G = 0), which
  // event-driven replay relies on for simultaneous timestamps. Zero sigmas are
  // legal too: they model a noise-free world, useful for exactness checks.
  if (cfg.sigma_v < 0.0 || cfg.sigma_omega < 0.0 || cfg.sigma_z < 0.0 || cfg.dt < 0.0 ||
      cfg.detection_prob < 0.0 || cfg.detection_prob > 1.0)
    throw ContractViolation("invalid noise configuration");
  check_pairs(m, pairs);

  const int n = 3 * m;
  const double dt = cfg.dt;

  SystemModel model;
  model.n = n;
  model.q = n;
  model.p = 2 * static_cast<int>(pairs.size());

  model.f = [m, dt](const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                    const Eigen::VectorXd& v) {
    Eigen::VectorXd out(x.size());
    for (int i = 0; i < m; ++i) {
      const double psi = x(3 * i + 2);
      const Eigen::Vector2d vel = u.segment<2>(3 * i) + v.segment<2>(3 * i);
      out.segment<2>(3 * i) = x.segment<2>(3 * i) + rot2(psi) * vel * dt;
      out(3 * i + 2) = psi + (u(3 * i + 2) + v(3 * i + 2)) * dt;
    }
    return out;
  };

  model.F = [m, n, dt](const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
    Eigen::MatrixXd F = Eigen::MatrixXd::Identity(n, n);
    for (int i = 0; i < m; ++i) {
      const Eigen::Vector2d vel = u.segment<2>(3 * i);
      F.block<2, 1>(3 * i, 3 * i + 2) = kJ * rot2(x(3 * i + 2)) * vel * dt;
    }
    return F;
  };

  model.G = [m, n, dt](const Eigen::VectorXd& x, const Eigen::VectorXd&) {
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < m; ++i) {
      G.block<2, 2>(3 * i, 3 * i) = rot2(x(3 * i + 2)) * dt;
      G(3 * i + 2, 3 * i + 2) = dt;
    }
    return G;
  };

  model.h = [pairs](const Eigen::VectorXd& x, const Eigen::VectorXd& w) {
    Eigen::VectorXd y(2 * pairs.size());
    for (size_t k = 0; k < pairs.size(); ++k) {
      const auto& [i, j] = pairs[k];
      const Eigen::Vector2d d = x.segment<2>(3 * j) - x.segment<2>(3 * i);
      y.segment<2>(2 * k) = rot2(x(3 * i + 2)).transpose() * d + w.segment<2>(2 * k);
    }
    return y;
  };

  model.H = [pairs, n](const Eigen::VectorXd& x) {
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(2 * pairs.size(), n);
    for (size_t k = 0; k < pairs.size(); ++k) {
      const auto& [i, j] = pairs[k];
      const Eigen::Matrix2d Rt = rot2(x(3 * i + 2)).transpose();
      const Eigen::Vector2d d = x.segment<2>(3 * j) - x.segment<2>(3 * i);
      H.block<2, 2>(2 * k, 3 * i) = -Rt;
      H.block<2, 1>(2 * k, 3 * i + 2) = -Rt * kJ * d;
      H.block<2, 2>(2 * k, 3 * j) = Rt;
    }
    return H;
  };

  model.D = [p = model.p](const Eigen::VectorXd&) {
    return Eigen::MatrixXd::Identity(p, p);
  };

  model.residual = [](const Eigen::VectorXd& measured, const Eigen::VectorXd& predicted) {
    return (measured - predicted).eval();
  };

  model.normalize = [m](Eigen::VectorXd x) {
    for (int i = 0; i < m; ++i) x(3 * i + 2) = wrap_angle(x(3 * i + 2));
    return x;
  };

  return model;
}

NoiseSpec cl_noise_spec(int m, const ClNoiseConfig& cfg, int n_pairs) {
  NoiseSpec noise;
  noise.Q = Eigen::MatrixXd::Zero(3 * m, 3 * m);
  for (int i = 0; i < m; ++i) {
    noise.Q(3 * i, 3 * i) = cfg.sigma_v * cfg.sigma_v;
    noise.Q(3 * i + 1, 3 * i + 1) = cfg.sigma_v * cfg.sigma_v;
    noise.Q(3 * i + 2, 3 * i + 2) = cfg.sigma_omega * cfg.sigma_omega;
  }
  noise.R = cfg.sigma_z * cfg.sigma_z *
            Eigen::MatrixXd::Identity(2 * n_pairs, 2 * n_pairs);
  return noise;
}

Eigen::MatrixXd cl_unobservable_basis(const Eigen::VectorXd& x) {
  if (x.size() % 3 != 0) throw ContractViolation("fleet state length must be 3m");
  const int m = static_cast<int>(x.size()) / 3;
  Eigen::MatrixXd N = Eigen::MatrixXd::Zero(3 * m, 3);
  for (int i = 0; i < m; ++i) {
    N.block<2, 2>(3 * i, 0).setIdentity();
    N.block<2, 1>(3 * i, 2) = kJ * x.segment<2>(3 * i);
    N(3 * i + 2, 2) = 1.0;
  }
  return N;
}

Transformation cl_transform_t1(int m) {
  if (m < 2) throw ContractViolation("need at least 2 robots");
  const int n = 3 * m;

  Transformation out;
  out.T = [m, n](const Eigen::VectorXd& x) {
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(n, n);
    const Eigen::Vector2d p1 = x.segment<2>(0);
    T.block<2, 2>(0, 0).setIdentity();
    T.block<2, 1>(0, 2) = -kJ * p1;
    T(2, 2) = 1.0;
    for (int i = 1; i < m; ++i) {
      T.block<2, 2>(3 * i, 0) = -Eigen::Matrix2d::Identity();
      T.block<2, 1>(3 * i, 2) = -kJ * (x.segment<2>(3 * i) - p1);
      T(3 * i + 2, 2) = -1.0;
      T.block<3, 3>(3 * i, 3 * i).setIdentity();
    }
    return T;
  };
  out.T_inv = [m, n](const Eigen::VectorXd& x) {
    Eigen::MatrixXd T_inv = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < m; ++i) {
      T_inv.block<2, 2>(3 * i, 0).setIdentity();
      T_inv.block<2, 1>(3 * i, 2) = kJ * x.segment<2>(3 * i);
      T_inv(3 * i + 2, 2) = 1.0;
      if (i > 0) T_inv.block<3, 3>(3 * i, 3 * i).setIdentity();
    }
    return T_inv;
  };
  out.exact_update = [](const Eigen::VectorXd& x_pred, const Eigen::VectorXd& e) {
    return cl_exact_update_closed_form_t1(FleetState::from_vector(x_pred), e).to_vector();
  };
  return out;
}

Transformation cl_transform_t2(int m) {
  if (m < 2) throw ContractViolation("need at least 2 robots");
  const int n = 3 * m;

  Transformation out;
  out.T = [m, n](const Eigen::VectorXd& x) {
    Eigen::MatrixXd T = Eigen::MatrixXd::Identity(n, n);
    for (int i = 0; i < m; ++i) T.block<2, 1>(3 * i, 3 * i + 2) = -kJ * x.segment<2>(3 * i);
    return T;
  };
  out.T_inv = [m, n](const Eigen::VectorXd& x) {
    Eigen::MatrixXd T_inv = Eigen::MatrixXd::Identity(n, n);
    for (int i = 0; i < m; ++i)
      T_inv.block<2, 1>(3 * i, 3 * i + 2) = kJ * x.segment<2>(3 * i);
    return T_inv;
  };
  out.exact_update = [](const Eigen::VectorXd& x_pred, const Eigen::VectorXd& e) {
    return cl_exact_update_closed_form(FleetState::from_vector(x_pred), e).to_vector();
  };
  // T(f(x)) F(x) T_inv(x) collapses to the identity for every state and input.
  out.constant_F = Eigen::MatrixXd::Identity(n, n);
  return out;
}

FleetState cl_exact_update_closed_form(const FleetState& pred, const Eigen::VectorXd& e) {
  if (e.size() != 3 * pred.robot_count())
    throw ContractViolation("correction length must match fleet state");
  if (!e.allFinite()) throw ContractViolation("correction must be finite");
  FleetState out = pred;
  for (int i = 0; i < pred.robot_count(); ++i) {
    const double eps = e(3 * i + 2);
    out.poses[i].psi = wrap_angle(pred.poses[i].psi + eps);
    out.poses[i].p = solve_position_factor(eps) * (pred.poses[i].p + e.segment<2>(3 * i));
  }
  return out;
}

FleetState cl_exact_update_closed_form_t1(const FleetState& pred, const Eigen::VectorXd& e) {
  if (e.size() != 3 * pred.robot_count())
    throw ContractViolation("correction length must match fleet state");
  if (!e.allFinite()) throw ContractViolation("correction must be finite");
  FleetState out = pred;
  // Every position block shares the first block's angle component.
  const double eps = e(2);
  const Eigen::Matrix2d A = solve_position_factor(eps);
  out.poses[0].psi = wrap_angle(pred.poses[0].psi + eps);
  out.poses[0].p = A * (pred.poses[0].p + e.segment<2>(0));
  for (int i = 1; i < pred.robot_count(); ++i) {
    out.poses[i].psi = wrap_angle(pred.poses[i].psi + eps + e(3 * i + 2));
    out.poses[i].p = A * (pred.poses[i].p + e.segment<2>(0) + e.segment<2>(3 * i));
  }
  return out;
}

}  // namespace tekf
