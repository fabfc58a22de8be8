#include "tekf/monte_carlo.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "tekf/angles.hpp"
#include "tekf/errors.hpp"

namespace tekf {
namespace {

constexpr double kCondLimit = 1e12;

// Raw per-trial series; reduced across trials in index order.
struct TrialResult {
  bool diverged = false;
  double seconds = 0.0;
  std::vector<double> sum_sq_pos;  // sum over robots of squared position error
  std::vector<double> sum_sq_ori;
  std::vector<double> nees_pos;  // robot-averaged
  std::vector<double> nees_ori;
  std::vector<double> nees_joint;
};

int robot_count(const TrialConfig& cfg) { return cfg.app == AppKind::Cl ? cfg.robots : 1; }

TrialResult run_one_trial(const TrialConfig& cfg, int trial) {
  const std::uint64_t seed = cfg.master_seed + static_cast<std::uint64_t>(trial);
  FilterSetup setup{cfg.estimator, cfg.transform, cfg.update_mode, cfg.joseph_form};

  std::vector<Eigen::VectorXd> truth;
  FilterRun run;
  if (cfg.app == AppKind::Cl) {
    const ClSimData sim = simulate_cl(cfg.robots, cfg.cl, cfg.steps, seed);
    run = run_cl_filter(sim, setup);
    truth = sim.x_true;
  } else {
    const std::vector<Landmark> lms =
        cfg.landmarks.empty() ? tt_default_landmarks() : cfg.landmarks;
    const TtSimData sim = simulate_tt(lms, cfg.tt, cfg.steps, seed);
    run = run_tt_filter(sim, setup);
    truth = sim.x_true;
  }

  TrialResult res;
  res.seconds = run.seconds;
  if (run.diverged) {
    res.diverged = true;
    return res;
  }

  const int m = robot_count(cfg);
  const int steps = cfg.steps;
  res.sum_sq_pos.resize(steps);
  res.sum_sq_ori.resize(steps);
  res.nees_pos.resize(steps);
  res.nees_ori.resize(steps);
  res.nees_joint.resize(steps);

  for (int k = 0; k < steps; ++k) {
    const Eigen::VectorXd& est = run.means[k];
    const Eigen::MatrixXd& cov = run.covs[k];
    const Eigen::VectorXd& tru = truth[k + 1];
    Eigen::VectorXd err(est.size());
    double sp = 0.0, so = 0.0, np = 0.0, no = 0.0;
    for (int i = 0; i < m; ++i) {
      const Eigen::Vector2d ep = est.segment<2>(3 * i) - tru.segment<2>(3 * i);
      const double eo = wrap_angle(est(3 * i + 2) - tru(3 * i + 2));
      err.segment<2>(3 * i) = ep;
      err(3 * i + 2) = eo;
      sp += ep.squaredNorm();
      so += eo * eo;
      np += nees(ep, cov.block<2, 2>(3 * i, 3 * i));
      no += nees(Eigen::VectorXd::Constant(1, eo),
                 cov.block<1, 1>(3 * i + 2, 3 * i + 2));
    }
    res.sum_sq_pos[k] = sp;
    res.sum_sq_ori[k] = so;
    res.nees_pos[k] = np / m;
    res.nees_ori[k] = no / m;
    res.nees_joint[k] = nees(err, cov);
  }
  return res;
}

}  // namespace

void validate(const TrialConfig& cfg) {
  if (cfg.trials < 1) throw ConfigError("trials must be positive");
  if (cfg.steps < 1) throw ConfigError("steps must be positive");
  if (cfg.threads < 0) throw ConfigError("threads must be non-negative");
  if (cfg.app == AppKind::Cl) {
    if (cfg.robots < 2) throw ConfigError("fleet runs need at least 2 robots");
    if (cfg.cl.detection_prob < 0.0 || cfg.cl.detection_prob > 1.0)
      throw ConfigError("detection probability must lie in [0, 1]");
    if (cfg.estimator == EstimatorKind::Dr)
      throw ConfigError("dead reckoning is a target-tracking baseline");
    if (cfg.transform == TransformKind::TtDefault)
      throw ConfigError("the target transformation does not apply to a fleet");
  } else {
    if (cfg.transform == TransformKind::T1 || cfg.transform == TransformKind::T2)
      throw ConfigError("fleet transformations do not apply to target tracking");
  }
  // A transformed filter with the identity transformation is allowed: it
  // reduces both filters to the classical EKF.
  const bool transformed =
      cfg.estimator == EstimatorKind::Tekf1 || cfg.estimator == EstimatorKind::Tekf2;
  if (!transformed && cfg.transform != TransformKind::Identity)
    throw ConfigError("only the transformed filters take a transformation");
}

double nees(const Eigen::VectorXd& e, const Eigen::MatrixXd& cov) {
  if (cov.rows() != e.size() || cov.cols() != e.size())
    throw ContractViolation("nees: dimension mismatch");
  if (e.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(cov);
  const double smax = svd.singularValues()(0);
  const double smin = svd.singularValues()(svd.singularValues().size() - 1);
  if (!(smin > 0.0) || smax / smin > kCondLimit)
    return std::numeric_limits<double>::quiet_NaN();
  return e.dot(cov.ldlt().solve(e));
}

TrialMetrics run_monte_carlo(const TrialConfig& cfg) {
  validate(cfg);

  std::vector<TrialResult> results(cfg.trials);
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  const int workers =
      std::min(cfg.trials, cfg.threads > 0 ? cfg.threads : static_cast<int>(hw));

  if (workers <= 1) {
    for (int t = 0; t < cfg.trials; ++t) results[t] = run_one_trial(cfg, t);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (int t = next.fetch_add(1); t < cfg.trials; t = next.fetch_add(1))
          results[t] = run_one_trial(cfg, t);
      });
    }
    for (std::thread& th : pool) th.join();
  }

  TrialMetrics out;
  out.trials_requested = cfg.trials;
  out.steps.resize(cfg.steps);
  out.nees_joint.assign(cfg.steps, 0.0);

  const int m = robot_count(cfg);
  std::vector<double> sq_pos(cfg.steps, 0.0), sq_ori(cfg.steps, 0.0);
  double seconds = 0.0;
  for (const TrialResult& r : results) {
    seconds += r.seconds;
    if (r.diverged) {
      ++out.diverged_trials;
      continue;
    }
    ++out.trials_used;
    for (int k = 0; k < cfg.steps; ++k) {
      sq_pos[k] += r.sum_sq_pos[k];
      sq_ori[k] += r.sum_sq_ori[k];
      out.steps[k].nees_pos += r.nees_pos[k];
      out.steps[k].nees_ori += r.nees_ori[k];
      out.nees_joint[k] += r.nees_joint[k];
    }
  }
  if (out.trials_used == 0) {
    out.steps.clear();
    out.nees_joint.clear();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    out.avg_rmse_pos = out.avg_rmse_ori = nan;
    out.avg_nees_pos = out.avg_nees_ori = out.avg_nees_joint = nan;
    return out;
  }

  const double used = out.trials_used;
  for (int k = 0; k < cfg.steps; ++k) {
    StepMetrics& s = out.steps[k];
    s.rmse_pos = std::sqrt(sq_pos[k] / (used * m));
    s.rmse_ori = std::sqrt(sq_ori[k] / (used * m));
    s.nees_pos /= used;
    s.nees_ori /= used;
    out.nees_joint[k] /= used;
    out.avg_rmse_pos += s.rmse_pos;
    out.avg_rmse_ori += s.rmse_ori;
    out.avg_nees_pos += s.nees_pos;
    out.avg_nees_ori += s.nees_ori;
    out.avg_nees_joint += out.nees_joint[k];
  }
  out.avg_rmse_pos /= cfg.steps;
  out.avg_rmse_ori /= cfg.steps;
  out.avg_nees_pos /= cfg.steps;
  out.avg_nees_ori /= cfg.steps;
  out.avg_nees_joint /= cfg.steps;
  out.wall_ms_per_step = 1e3 * seconds / (static_cast<double>(cfg.trials) * cfg.steps);
  return out;
}

std::string to_string(AppKind v) { return v == AppKind::Cl ? "cl" : "tt"; }

std::string to_string(EstimatorKind v) {
  switch (v) {
    case EstimatorKind::Ekf: return "ekf";
    case EstimatorKind::Fej: return "fej";
    case EstimatorKind::Tekf1: return "tekf1";
    case EstimatorKind::Tekf2: return "tekf2";
    case EstimatorKind::Dr: return "dr";
  }
  return "ekf";
}

std::string to_string(TransformKind v) {
  switch (v) {
    case TransformKind::Identity: return "identity";
    case TransformKind::T1: return "t1";
    case TransformKind::T2: return "t2";
    case TransformKind::TtDefault: return "tt-default";
  }
  return "identity";
}

std::string to_string(UpdateMode v) {
  return v == UpdateMode::Exact ? "exact" : "approximate";
}

AppKind app_from_string(const std::string& s) {
  if (s == "cl") return AppKind::Cl;
  if (s == "tt") return AppKind::Tt;
  throw ConfigError("unknown app '" + s + "' (expected cl|tt)");
}

EstimatorKind estimator_from_string(const std::string& s) {
  if (s == "ekf") return EstimatorKind::Ekf;
  if (s == "fej") return EstimatorKind::Fej;
  if (s == "tekf1") return EstimatorKind::Tekf1;
  if (s == "tekf2") return EstimatorKind::Tekf2;
  if (s == "dr") return EstimatorKind::Dr;
  throw ConfigError("unknown estimator '" + s + "' (expected ekf|fej|tekf1|tekf2|dr)");
}

TransformKind transform_from_string(const std::string& s) {
  if (s == "identity") return TransformKind::Identity;
  if (s == "t1") return TransformKind::T1;
  if (s == "t2") return TransformKind::T2;
  if (s == "tt-default") return TransformKind::TtDefault;
  throw ConfigError("unknown transformation '" + s + "' (expected identity|t1|t2|tt-default)");
}

UpdateMode update_mode_from_string(const std::string& s) {
  if (s == "exact") return UpdateMode::Exact;
  if (s == "approximate") return UpdateMode::Approximate;
  throw ConfigError("unknown update mode '" + s + "' (expected exact|approximate)");
}

}  // namespace tekf
