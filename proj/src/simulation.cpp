#include "tekf/simulation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include "tekf/angles.hpp"
#include "tekf/errors.hpp"

namespace tekf {
namespace {

// Fixed body-frame forward speed shared by both applications.
constexpr double kForwardSpeed = 0.3;
constexpr double kOmegaRange = 0.1;  // per-robot angular rate ~ U[-0.1, 0.1]
// A robot beyond this radius is steered back toward the origin. Unbounded
// wandering lets inter-robot ranges grow until heading-error terms that are
// quadratic in the range swamp the 0.1 m measurement noise and every
// linearized filter breaks down, so the arena has to stay bounded.
constexpr double kContainRadius = 8.0;
constexpr double kDivergedPosError = 1e3;

Eigen::MatrixXd zero_cov(int n) { return Eigen::MatrixXd::Zero(n, n); }

bool state_diverged(const Eigen::VectorXd& est, const Eigen::VectorXd& truth) {
  if (!est.allFinite()) return true;
  // Position entries only; an angle cannot exceed the threshold once wrapped.
  for (int i = 0; i + 2 < est.size(); i += 3) {
    if ((est.segment<2>(i) - truth.segment<2>(i)).norm() > kDivergedPosError) return true;
  }
  return false;
}

Transformation make_transform(TransformKind kind, int n, int m) {
  switch (kind) {
    case TransformKind::Identity:
      return identity_transformation(n);
    case TransformKind::T1:
      return cl_transform_t1(m);
    case TransformKind::T2:
      return cl_transform_t2(m);
    case TransformKind::TtDefault:
      if (n != 3) throw ConfigError("target transformation needs a 3-state system");
      return tt_transform();
  }
  throw ConfigError("unknown transformation kind");
}

}  // namespace

ClSimData simulate_cl(int m, const ClNoiseConfig& cfg, int steps, std::uint64_t seed) {
  if (m < 2) throw ContractViolation("simulate_cl: need at least 2 robots");
  if (steps < 1) throw ContractViolation("simulate_cl: need at least 1 step");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> upos(-5.0, 5.0);
  std::uniform_real_distribution<double> uang(-kPi, kPi);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_real_distribution<double> uomega(-kOmegaRange, kOmegaRange);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const int n = 3 * m;
  ClSimData sim;
  sim.m = m;
  sim.cfg = cfg;

  // Draw order is part of the contract: initial poses, then per step inputs,
  // process noise, detections, measurement noise.
  sim.x0.resize(n);
  for (int i = 0; i < m; ++i) {
    sim.x0(3 * i) = upos(rng);
    sim.x0(3 * i + 1) = upos(rng);
    sim.x0(3 * i + 2) = wrap_angle(uang(rng));
  }

  const SystemModel model = cl_model(m, cfg);
  const std::vector<RobotPair> pairs = cl_all_pairs(m);
  const Eigen::Matrix2d R_meas = cfg.sigma_z * cfg.sigma_z * Eigen::Matrix2d::Identity();

  sim.u.reserve(steps);
  sim.x_true.reserve(steps + 1);
  sim.meas.resize(steps);
  sim.x_true.push_back(sim.x0);

  for (int k = 0; k < steps; ++k) {
    Eigen::VectorXd u(n);
    for (int i = 0; i < m; ++i) {
      u(3 * i) = kForwardSpeed;
      u(3 * i + 1) = 0.0;
      // The random draw always happens so the noise stream layout never
      // depends on the trajectory; a strayed robot turns home instead.
      const double omega_free = uomega(rng);
      const Eigen::Vector2d p = sim.x_true.back().segment<2>(3 * i);
      if (p.norm() > kContainRadius) {
        const double to_origin = std::atan2(-p.y(), -p.x());
        const double err = wrap_angle(to_origin - sim.x_true.back()(3 * i + 2));
        u(3 * i + 2) = std::clamp(err, -kOmegaRange, kOmegaRange);
      } else {
        u(3 * i + 2) = omega_free;
      }
    }
    Eigen::VectorXd v(n);
    for (int i = 0; i < m; ++i) {
      v(3 * i) = cfg.sigma_v * gauss(rng);
      v(3 * i + 1) = cfg.sigma_v * gauss(rng);
      v(3 * i + 2) = cfg.sigma_omega * gauss(rng);
    }
    Eigen::VectorXd next = model.f(sim.x_true.back(), u, v);
    next = model.normalize(next);
    sim.u.push_back(u);
    sim.x_true.push_back(next);

    for (const RobotPair& pr : pairs) {
      if (u01(rng) >= cfg.detection_prob) continue;
      const Eigen::Vector2d pi = next.segment<2>(3 * pr.first);
      const Eigen::Vector2d pj = next.segment<2>(3 * pr.second);
      const double psi = next(3 * pr.first + 2);
      Eigen::Vector2d w(cfg.sigma_z * gauss(rng), cfg.sigma_z * gauss(rng));
      RelPosMeasurement meas;
      meas.observer = pr.first;
      meas.target = pr.second;
      meas.z = rot2(psi).transpose() * (pj - pi) + w;
      meas.R = R_meas;
      sim.meas[k].push_back(meas);
    }
  }
  return sim;
}

std::vector<Landmark> tt_default_landmarks() {
  // Both landmarks sit off the center of the commanded circle (radius v/omega
  // around (0, 3)) so neither one's blind rotation direction lines up with the
  // trajectory's own symmetry.
  return {Landmark{0, {2.0, 5.0}}, Landmark{1, {-4.0, 1.0}}};
}

TtSimData simulate_tt(const std::vector<Landmark>& landmarks, const TtConfig& cfg,
                      int steps, std::uint64_t seed) {
  if (landmarks.empty()) throw ContractViolation("simulate_tt: need at least 1 landmark");
  if (steps < 1) throw ContractViolation("simulate_tt: need at least 1 step");
  if (cfg.switch_period < 1)
    throw ContractViolation("simulate_tt: switch_period must be positive");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  TtSimData sim;
  sim.cfg = cfg;
  sim.landmarks = landmarks;
  sim.x0 = Eigen::Vector3d::Zero();

  const SystemModel model = tt_model(landmarks, cfg);
  Eigen::Vector3d u(cfg.v.x(), cfg.v.y(), cfg.omega);

  sim.x_true.push_back(sim.x0);
  for (int k = 0; k < steps; ++k) {
    Eigen::Vector3d v(cfg.sigma_v * gauss(rng), cfg.sigma_v * gauss(rng),
                      cfg.sigma_omega * gauss(rng));
    Eigen::VectorXd next = model.f(sim.x_true.back(), u, v);
    next = model.normalize(next);
    sim.u.push_back(u);
    sim.x_true.push_back(next);

    const int idx = (k / cfg.switch_period) % static_cast<int>(landmarks.size());
    const Eigen::Vector2d d = landmarks[idx].p_s - next.head<2>();
    if (d.norm() < 1e-9) throw DegenerateGeometry("simulated target reached a landmark");
    const double bearing = std::atan2(d.y(), d.x()) - next(2);
    sim.landmark_index.push_back(idx);
    sim.z.push_back(wrap_angle(bearing + cfg.sigma_bearing * gauss(rng)));
  }
  return sim;
}

FilterRun run_cl_filter(const ClSimData& sim, const FilterSetup& setup) {
  if (setup.estimator == EstimatorKind::Dr)
    throw ConfigError("dead reckoning is a target-tracking baseline");
  const int m = sim.m;
  const int n = 3 * m;
  const int steps = static_cast<int>(sim.u.size());

  FilterRun run;
  run.means.reserve(steps);
  run.covs.reserve(steps);

  const bool transformed =
      setup.estimator == EstimatorKind::Tekf1 || setup.estimator == EstimatorKind::Tekf2;
  Transformation trans =
      transformed ? make_transform(setup.transform, n, m) : identity_transformation(n);

  EkfOptions opt;
  opt.joseph_form = setup.joseph_form;
  if (setup.estimator == EstimatorKind::Fej) opt.policy = LinearizationPolicy::FirstEstimates;
  FejCache fej;

  GaussianBelief belief{sim.x0, zero_cov(n)};
  Tekf1State t1;
  Tekf2State t2;
  if (setup.estimator == EstimatorKind::Tekf1) t1 = tekf1_init(belief, trans);
  if (setup.estimator == EstimatorKind::Tekf2) t2 = Tekf2State{belief};

  const auto start = std::chrono::steady_clock::now();
  for (int k = 0; k < steps; ++k) {
    std::vector<RobotPair> pairs;
    pairs.reserve(sim.meas[k].size());
    Eigen::VectorXd y(2 * static_cast<Eigen::Index>(sim.meas[k].size()));
    for (std::size_t j = 0; j < sim.meas[k].size(); ++j) {
      pairs.emplace_back(sim.meas[k][j].observer, sim.meas[k][j].target);
      y.segment<2>(2 * static_cast<Eigen::Index>(j)) = sim.meas[k][j].z;
    }
    const SystemModel model = cl_model(m, sim.cfg, pairs);
    const NoiseSpec noise = cl_noise_spec(m, sim.cfg, static_cast<int>(pairs.size()));

    switch (setup.estimator) {
      case EstimatorKind::Ekf:
      case EstimatorKind::Fej: {
        FejCache* cache = setup.estimator == EstimatorKind::Fej ? &fej : nullptr;
        belief = ekf_predict(belief, model, sim.u[k], noise, opt, cache);
        belief = ekf_update(belief, model, y, noise, opt, cache);
        run.means.push_back(belief.mean);
        run.covs.push_back(belief.cov);
        break;
      }
      case EstimatorKind::Tekf1: {
        t1 = tekf1_predict(t1, model, trans, sim.u[k], noise);
        t1 = tekf1_update(t1, model, trans, y, noise, setup.update_mode);
        run.means.push_back(t1.mean);
        run.covs.push_back(tekf1_cov_original(t1, trans));
        run.cov_bars.push_back(t1.cov_bar);
        break;
      }
      case EstimatorKind::Tekf2: {
        t2 = tekf2_step(t2, model, trans, sim.u[k], y, noise, setup.update_mode);
        run.means.push_back(t2.belief.mean);
        run.covs.push_back(t2.belief.cov);
        break;
      }
      case EstimatorKind::Dr:
        break;
    }
    if (state_diverged(run.means.back(), sim.x_true[k + 1])) {
      run.diverged = true;
      break;
    }
  }
  run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return run;
}

FilterRun run_tt_filter(const TtSimData& sim, const FilterSetup& setup) {
  const int steps = static_cast<int>(sim.u.size());
  FilterRun run;
  run.means.reserve(steps);
  run.covs.reserve(steps);

  const bool transformed =
      setup.estimator == EstimatorKind::Tekf1 || setup.estimator == EstimatorKind::Tekf2;
  Transformation trans =
      transformed ? make_transform(setup.transform, 3, 1) : identity_transformation(3);

  EkfOptions opt;
  opt.joseph_form = setup.joseph_form;
  if (setup.estimator == EstimatorKind::Fej) opt.policy = LinearizationPolicy::FirstEstimates;
  FejCache fej;

  GaussianBelief belief{sim.x0, zero_cov(3)};
  Tekf1State t1;
  Tekf2State t2;
  if (setup.estimator == EstimatorKind::Tekf1) t1 = tekf1_init(belief, trans);
  if (setup.estimator == EstimatorKind::Tekf2) t2 = Tekf2State{belief};

  const auto start = std::chrono::steady_clock::now();
  for (int k = 0; k < steps; ++k) {
    const std::vector<Landmark> active{sim.landmarks[sim.landmark_index[k]]};
    const SystemModel model = tt_model(active, sim.cfg);
    const NoiseSpec noise = tt_noise_spec(sim.cfg, 1);
    Eigen::VectorXd y(1);
    y(0) = sim.z[k];

    switch (setup.estimator) {
      case EstimatorKind::Ekf:
      case EstimatorKind::Fej: {
        FejCache* cache = setup.estimator == EstimatorKind::Fej ? &fej : nullptr;
        belief = ekf_predict(belief, model, sim.u[k], noise, opt, cache);
        belief = ekf_update(belief, model, y, noise, opt, cache);
        run.means.push_back(belief.mean);
        run.covs.push_back(belief.cov);
        break;
      }
      case EstimatorKind::Dr: {
        belief = dead_reckoning_step(belief, sim.u[k], sim.cfg);
        run.means.push_back(belief.mean);
        run.covs.push_back(belief.cov);
        break;
      }
      case EstimatorKind::Tekf1: {
        t1 = tekf1_predict(t1, model, trans, sim.u[k], noise);
        t1 = tekf1_update(t1, model, trans, y, noise, setup.update_mode);
        run.means.push_back(t1.mean);
        run.covs.push_back(tekf1_cov_original(t1, trans));
        run.cov_bars.push_back(t1.cov_bar);
        break;
      }
      case EstimatorKind::Tekf2: {
        t2 = tekf2_step(t2, model, trans, sim.u[k], y, noise, setup.update_mode);
        run.means.push_back(t2.belief.mean);
        run.covs.push_back(t2.belief.cov);
        break;
      }
    }
    if (state_diverged(run.means.back(), sim.x_true[k + 1])) {
      run.diverged = true;
      break;
    }
  }
  run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return run;
}

namespace {

// Shared recorder: classical-EKF linearization points along a noisy run.
template <typename ModelAt, typename NoiseAt, typename MeasAt>
JacobianSequences record_estimator(const Eigen::VectorXd& x0, int steps,
                                   const std::vector<Eigen::VectorXd>& u, ModelAt model_at,
                                   NoiseAt noise_at, MeasAt meas_at) {
  JacobianSequences seq;
  seq.F.reserve(steps);
  seq.H.reserve(steps);
  GaussianBelief belief{x0, zero_cov(static_cast<int>(x0.size()))};
  for (int k = 0; k < steps; ++k) {
    const SystemModel model = model_at(k);
    seq.F.push_back(model.F(belief.mean, u[k]));
    const GaussianBelief pred = ekf_predict(belief, model, u[k], noise_at(k));
    seq.H.push_back(model.H(pred.mean));
    belief = ekf_update(pred, model, meas_at(k), noise_at(k));
  }
  return seq;
}

template <typename ModelAt>
JacobianSequences record_nominal(const Eigen::VectorXd& x0, int steps,
                                 const std::vector<Eigen::VectorXd>& u, ModelAt model_at) {
  JacobianSequences seq;
  seq.F.reserve(steps);
  seq.H.reserve(steps);
  Eigen::VectorXd x = x0;
  for (int k = 0; k < steps; ++k) {
    const SystemModel model = model_at(k);
    seq.F.push_back(model.F(x, u[k]));
    x = model.normalize(model.f(x, u[k], Eigen::VectorXd::Zero(model.q)));
    seq.H.push_back(model.H(x));
  }
  return seq;
}

// T-EKF 1 run recording F_bar and H_bar exactly as the filter forms them.
template <typename ModelAt, typename NoiseAt, typename MeasAt>
JacobianSequences record_transformed(const Eigen::VectorXd& x0, int steps,
                                     const std::vector<Eigen::VectorXd>& u,
                                     const Transformation& trans, UpdateMode mode,
                                     ModelAt model_at, NoiseAt noise_at, MeasAt meas_at) {
  JacobianSequences seq;
  seq.F.reserve(steps);
  seq.H.reserve(steps);
  const int n = static_cast<int>(x0.size());
  Tekf1State state = tekf1_init(GaussianBelief{x0, zero_cov(n)}, trans);
  for (int k = 0; k < steps; ++k) {
    const SystemModel model = model_at(k);
    const Eigen::VectorXd x_prev = state.mean;
    const Tekf1State pred = tekf1_predict(state, model, trans, u[k], noise_at(k));
    seq.F.push_back(trans.T(pred.mean) * model.F(x_prev, u[k]) * trans.T_inv(x_prev));
    seq.H.push_back(model.H(pred.mean) * trans.T_inv(pred.mean));
    state = tekf1_update(pred, model, trans, meas_at(k), noise_at(k), mode);
  }
  return seq;
}

struct ClAccess {
  const ClSimData& sim;
  SystemModel model_at(int k) const {
    std::vector<RobotPair> pairs;
    pairs.reserve(sim.meas[k].size());
    for (const RelPosMeasurement& ms : sim.meas[k]) pairs.emplace_back(ms.observer, ms.target);
    return cl_model(sim.m, sim.cfg, pairs);
  }
  NoiseSpec noise_at(int k) const {
    return cl_noise_spec(sim.m, sim.cfg, static_cast<int>(sim.meas[k].size()));
  }
  Eigen::VectorXd meas_at(int k) const {
    Eigen::VectorXd y(2 * static_cast<Eigen::Index>(sim.meas[k].size()));
    for (std::size_t j = 0; j < sim.meas[k].size(); ++j)
      y.segment<2>(2 * static_cast<Eigen::Index>(j)) = sim.meas[k][j].z;
    return y;
  }
};

struct TtAccess {
  const TtSimData& sim;
  SystemModel model_at(int k) const {
    return tt_model({sim.landmarks[sim.landmark_index[k]]}, sim.cfg);
  }
  NoiseSpec noise_at(int) const { return tt_noise_spec(sim.cfg, 1); }
  Eigen::VectorXd meas_at(int k) const {
    Eigen::VectorXd y(1);
    y(0) = sim.z[k];
    return y;
  }
};

}  // namespace

JacobianSequences cl_estimator_sequences(const ClSimData& sim) {
  ClAccess a{sim};
  return record_estimator(
      sim.x0, static_cast<int>(sim.u.size()), sim.u, [&](int k) { return a.model_at(k); },
      [&](int k) { return a.noise_at(k); }, [&](int k) { return a.meas_at(k); });
}

JacobianSequences cl_nominal_sequences(const ClSimData& sim) {
  ClAccess a{sim};
  return record_nominal(sim.x0, static_cast<int>(sim.u.size()), sim.u,
                        [&](int k) { return a.model_at(k); });
}

JacobianSequences cl_transformed_sequences(const ClSimData& sim, const Transformation& trans,
                                           UpdateMode mode) {
  ClAccess a{sim};
  return record_transformed(
      sim.x0, static_cast<int>(sim.u.size()), sim.u, trans, mode,
      [&](int k) { return a.model_at(k); }, [&](int k) { return a.noise_at(k); },
      [&](int k) { return a.meas_at(k); });
}

JacobianSequences tt_estimator_sequences(const TtSimData& sim) {
  TtAccess a{sim};
  return record_estimator(
      sim.x0, static_cast<int>(sim.u.size()), sim.u, [&](int k) { return a.model_at(k); },
      [&](int k) { return a.noise_at(k); }, [&](int k) { return a.meas_at(k); });
}

JacobianSequences tt_nominal_sequences(const TtSimData& sim) {
  TtAccess a{sim};
  return record_nominal(sim.x0, static_cast<int>(sim.u.size()), sim.u,
                        [&](int k) { return a.model_at(k); });
}

JacobianSequences tt_transformed_sequences(const TtSimData& sim, const Transformation& trans,
                                           UpdateMode mode) {
  TtAccess a{sim};
  return record_transformed(
      sim.x0, static_cast<int>(sim.u.size()), sim.u, trans, mode,
      [&](int k) { return a.model_at(k); }, [&](int k) { return a.noise_at(k); },
      [&](int k) { return a.meas_at(k); });
}

ObservabilityMatrix window_observability(const JacobianSequences& seq, int anchor,
                                         int window) {
  const int K = static_cast<int>(seq.H.size());
  if (static_cast<int>(seq.F.size()) != K)
    throw ContractViolation("window_observability: F/H sequence length mismatch");
  if (anchor < 1 || window < 0 || anchor + window > K)
    throw ContractViolation("window_observability: window exceeds the recorded run");
  std::vector<Eigen::MatrixXd> H_seq(seq.H.begin() + (anchor - 1),
                                     seq.H.begin() + (anchor - 1) + window + 1);
  std::vector<Eigen::MatrixXd> F_seq(seq.F.begin() + anchor, seq.F.begin() + anchor + window);
  return build_observability_matrix(F_seq, H_seq, anchor);
}

}  // namespace tekf
