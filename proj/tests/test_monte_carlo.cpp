#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "oracles.hpp"
#include "tekf/cl.hpp"
#include "tekf/ekf.hpp"
#include "tekf/errors.hpp"
#include "tekf/monte_carlo.hpp"
#include "tekf/results_io.hpp"
#include "tekf/simulation.hpp"
#include "tekf/stats.hpp"
#include "tekf/tekf.hpp"

using namespace tekf;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path("/tmp/tekf_test_" + name) {}
  ~TempFile() { std::remove(path.c_str()); }
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

bool same_metrics(const TrialMetrics& a, const TrialMetrics& b) {
  if (a.steps.size() != b.steps.size()) return false;
  auto eq = [](double x, double y) { return x == y || (std::isnan(x) && std::isnan(y)); };
  for (std::size_t k = 0; k < a.steps.size(); ++k) {
    if (!eq(a.steps[k].rmse_pos, b.steps[k].rmse_pos)) return false;
    if (!eq(a.steps[k].rmse_ori, b.steps[k].rmse_ori)) return false;
    if (!eq(a.steps[k].nees_pos, b.steps[k].nees_pos)) return false;
    if (!eq(a.steps[k].nees_ori, b.steps[k].nees_ori)) return false;
    if (!eq(a.nees_joint[k], b.nees_joint[k])) return false;
  }
  return eq(a.avg_rmse_pos, b.avg_rmse_pos) && eq(a.avg_nees_joint, b.avg_nees_joint) &&
         a.trials_used == b.trials_used && a.diverged_trials == b.diverged_trials;
}

TrialConfig small_cl_config() {
  TrialConfig cfg;
  cfg.app = AppKind::Cl;
  cfg.estimator = EstimatorKind::Tekf2;
  cfg.transform = TransformKind::T2;
  cfg.robots = 3;
  cfg.trials = 3;
  cfg.steps = 25;
  cfg.master_seed = 7;
  cfg.threads = 1;
  return cfg;
}

}  // namespace

TEST_CASE("nees evaluates quadratic forms and flags singular blocks") {
  CHECK(nees(Eigen::Vector2d(1.0, 0.0), Eigen::Matrix2d::Identity()) ==
        Catch::Approx(1.0));
  CHECK(nees(Eigen::Vector2d(2.0, 0.0), Eigen::Vector2d(4.0, 1.0).asDiagonal()) ==
        Catch::Approx(1.0));
  CHECK(nees(Eigen::Vector3d(1.0, 2.0, 3.0), oracle::random_spd(3, 601)) > 0.0);
  CHECK(std::isnan(nees(Eigen::Vector2d(1.0, 1.0), Eigen::Matrix2d::Zero())));
  Eigen::Matrix2d nearly;
  nearly << 1.0, 0.0, 0.0, 1e-15;
  CHECK(std::isnan(nees(Eigen::Vector2d(1.0, 1.0), nearly)));
  CHECK(nees(Eigen::VectorXd(), Eigen::MatrixXd()) == 0.0);
  CHECK_THROWS_AS(nees(Eigen::Vector2d(1.0, 1.0), Eigen::Matrix3d::Identity()),
                  ContractViolation);
}

TEST_CASE("chi-square quantiles hit textbook values") {
  CHECK(chi_square_quantile(1, 0.5) == Catch::Approx(0.45493642311957).epsilon(1e-10));
  CHECK(chi_square_quantile(2, 0.95) == Catch::Approx(5.99146454710798).epsilon(1e-10));
  CHECK(chi_square_quantile(10, 0.025) == Catch::Approx(3.24697274845691).epsilon(1e-8));
  const NeesBand band = nees_band(1000, 2);
  CHECK(band.lo > 1.8);
  CHECK(band.lo < 2.0);
  CHECK(band.hi > 2.0);
  CHECK(band.hi < 2.2);
}

TEST_CASE("enum spellings round-trip and junk is rejected") {
  for (AppKind v : {AppKind::Cl, AppKind::Tt}) CHECK(app_from_string(to_string(v)) == v);
  for (EstimatorKind v : {EstimatorKind::Ekf, EstimatorKind::Fej, EstimatorKind::Tekf1,
                           EstimatorKind::Tekf2, EstimatorKind::Dr})
    CHECK(estimator_from_string(to_string(v)) == v);
  for (TransformKind v : {TransformKind::Identity, TransformKind::T1, TransformKind::T2,
                           TransformKind::TtDefault})
    CHECK(transform_from_string(to_string(v)) == v);
  for (UpdateMode v : {UpdateMode::Exact, UpdateMode::Approximate})
    CHECK(update_mode_from_string(to_string(v)) == v);
  CHECK_THROWS_AS(app_from_string("banana"), ConfigError);
  CHECK_THROWS_AS(estimator_from_string(""), ConfigError);
  CHECK_THROWS_AS(transform_from_string("t3"), ConfigError);
  CHECK_THROWS_AS(update_mode_from_string("fast"), ConfigError);
}

TEST_CASE("validate rejects incompatible app and estimator combinations") {
  TrialConfig cfg = small_cl_config();
  CHECK_NOTHROW(validate(cfg));

  cfg.estimator = EstimatorKind::Dr;
  cfg.transform = TransformKind::Identity;
  CHECK_THROWS_AS(validate(cfg), ConfigError);

  cfg = small_cl_config();
  cfg.transform = TransformKind::TtDefault;
  CHECK_THROWS_AS(validate(cfg), ConfigError);

  cfg = small_cl_config();
  cfg.app = AppKind::Tt;
  cfg.transform = TransformKind::T1;
  CHECK_THROWS_AS(validate(cfg), ConfigError);

  cfg = small_cl_config();
  cfg.estimator = EstimatorKind::Ekf;  // classical filter takes no transformation
  CHECK_THROWS_AS(validate(cfg), ConfigError);

  cfg = small_cl_config();
  cfg.estimator = EstimatorKind::Tekf1;
  cfg.transform = TransformKind::Identity;  // allowed: reduces to the EKF
  CHECK_NOTHROW(validate(cfg));

  cfg = small_cl_config();
  cfg.trials = 0;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg = small_cl_config();
  cfg.robots = 1;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
}

TEST_CASE("identical configs reproduce identical metrics") {
  const TrialConfig cfg = small_cl_config();
  const TrialMetrics a = run_monte_carlo(cfg);
  const TrialMetrics b = run_monte_carlo(cfg);
  REQUIRE(a.steps.size() == static_cast<std::size_t>(cfg.steps));
  CHECK(same_metrics(a, b));
  CHECK(a.trials_requested == 3);
  CHECK(a.trials_used + a.diverged_trials == a.trials_requested);
}

TEST_CASE("worker count never changes the numbers") {
  TrialConfig cfg = small_cl_config();
  cfg.trials = 5;
  cfg.threads = 1;
  const TrialMetrics serial = run_monte_carlo(cfg);
  cfg.threads = 3;
  const TrialMetrics parallel = run_monte_carlo(cfg);
  CHECK(same_metrics(serial, parallel));
}

TEST_CASE("noise-free fleet runs reproduce the truth exactly") {
  TrialConfig cfg;
  cfg.app = AppKind::Cl;
  cfg.estimator = EstimatorKind::Ekf;
  cfg.robots = 3;
  cfg.trials = 2;
  cfg.steps = 10;
  cfg.threads = 1;
  cfg.cl.sigma_v = cfg.cl.sigma_omega = cfg.cl.sigma_z = 0.0;
  cfg.cl.detection_prob = 0.0;  // no updates, so the zero covariance never meets a gain
  const TrialMetrics m = run_monte_carlo(cfg);
  CHECK(m.trials_used == 2);
  CHECK(m.avg_rmse_pos == 0.0);
  CHECK(m.avg_rmse_ori == 0.0);
  for (const StepMetrics& s : m.steps) {
    CHECK(s.rmse_pos == 0.0);
    CHECK(s.rmse_ori == 0.0);
    CHECK(std::isnan(s.nees_pos));  // zero covariance has no defined NEES
  }
}

TEST_CASE("noise-free dead reckoning tracks the target exactly") {
  TrialConfig cfg;
  cfg.app = AppKind::Tt;
  cfg.estimator = EstimatorKind::Dr;
  cfg.trials = 2;
  cfg.steps = 20;
  cfg.threads = 1;
  cfg.tt.sigma_v = cfg.tt.sigma_omega = cfg.tt.sigma_bearing = 0.0;
  const TrialMetrics m = run_monte_carlo(cfg);
  CHECK(m.trials_used == 2);
  CHECK(m.avg_rmse_pos == 0.0);
  CHECK(m.avg_rmse_ori == 0.0);
}

TEST_CASE("EKF NEES stays inside the chi-square band on a linear-Gaussian toy") {
  // On a linear model the EKF is the exact Kalman filter, so the filter is
  // consistent by construction and per-step average NEES across N trials is
  // chi-square with 2N degrees of freedom, scaled by 1/N.
  const int trials = 1000, steps = 40, n = 2;
  Eigen::MatrixXd F_mat(n, n), H_mat(1, n);
  F_mat << 0.95, 0.1, 0.0, 0.9;
  H_mat << 1.0, 0.0;

  SystemModel model;
  model.n = n;
  model.q = n;
  model.p = 1;
  model.f = [F_mat](const Eigen::VectorXd& x, const Eigen::VectorXd&,
                    const Eigen::VectorXd& v) { return (F_mat * x + v).eval(); };
  model.h = [H_mat](const Eigen::VectorXd& x, const Eigen::VectorXd& w) {
    return (H_mat * x + w).eval();
  };
  model.F = [F_mat](const Eigen::VectorXd&, const Eigen::VectorXd&) { return F_mat; };
  model.G = [n](const Eigen::VectorXd&, const Eigen::VectorXd&) {
    return Eigen::MatrixXd::Identity(n, n);
  };
  model.H = [H_mat](const Eigen::VectorXd&) { return H_mat; };
  model.D = [](const Eigen::VectorXd&) { return Eigen::MatrixXd::Identity(1, 1); };
  model.residual = [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return (a - b).eval();
  };

  NoiseSpec noise;
  noise.Q = 0.01 * Eigen::MatrixXd::Identity(n, n);
  noise.R = 0.04 * Eigen::MatrixXd::Identity(1, 1);
  const Eigen::MatrixXd P0 = 0.25 * Eigen::MatrixXd::Identity(n, n);
  const Eigen::VectorXd u = Eigen::VectorXd::Zero(n);

  std::vector<double> step_avg(steps, 0.0);
  for (int t = 0; t < trials; ++t) {
    std::mt19937_64 rng(1234 + t);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto draw = [&](int k, double sd) {
      Eigen::VectorXd v(k);
      for (int i = 0; i < k; ++i) v(i) = sd * gauss(rng);
      return v;
    };
    Eigen::VectorXd x_true = draw(n, 0.5);
    GaussianBelief belief{Eigen::VectorXd::Zero(n), P0};
    for (int k = 0; k < steps; ++k) {
      x_true = model.f(x_true, u, draw(n, 0.1));
      const Eigen::VectorXd y = model.h(x_true, draw(1, 0.2));
      belief = ekf_update(ekf_predict(belief, model, u, noise), model, y, noise);
      step_avg[k] += nees(x_true - belief.mean, belief.cov) / trials;
    }
  }

  const NeesBand band = nees_band(trials, n);
  int inside = 0;
  double overall = 0.0;
  for (double v : step_avg) {
    overall += v / steps;
    if (v >= band.lo && v <= band.hi) ++inside;
  }
  CHECK(overall > 1.8);
  CHECK(overall < 2.2);
  CHECK(inside >= static_cast<int>(0.9 * steps));
}

TEST_CASE("CSV output round-trips at full precision") {
  TrialConfig cfg = small_cl_config();
  cfg.steps = 8;
  const TrialMetrics m = run_monte_carlo(cfg);
  TempFile tmp("roundtrip.csv");
  emit_results(m, cfg, tmp.path, ResultsFormat::Csv);
  const std::vector<StepMetrics> back = parse_results_csv(tmp.path);
  REQUIRE(back.size() == m.steps.size());
  for (std::size_t k = 0; k < back.size(); ++k) {
    CHECK(back[k].rmse_pos == m.steps[k].rmse_pos);
    CHECK(back[k].rmse_ori == m.steps[k].rmse_ori);
    CHECK(back[k].nees_pos == m.steps[k].nees_pos);
    CHECK(back[k].nees_ori == m.steps[k].nees_ori);
  }
}

TEST_CASE("empty metrics produce a header-only file that parses to nothing") {
  TempFile tmp("empty.csv");
  emit_results(TrialMetrics{}, small_cl_config(), tmp.path, ResultsFormat::Csv);
  CHECK(parse_results_csv(tmp.path).empty());
}

TEST_CASE("malformed CSV inputs carry file and line diagnostics") {
  TempFile tmp("bad.csv");

  write_text(tmp.path, "wrong,header\n");
  CHECK_THROWS_AS(parse_results_csv(tmp.path), ParseError);

  write_text(tmp.path, "step,rmse_pos,rmse_ori,nees_pos,nees_ori\n1,0.5,0.1\n");
  try {
    parse_results_csv(tmp.path);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.file == tmp.path);
    CHECK(e.line == 2);
  }

  write_text(tmp.path, "step,rmse_pos,rmse_ori,nees_pos,nees_ori\n1,0.5,abc,1.9,0.9\n");
  CHECK_THROWS_AS(parse_results_csv(tmp.path), ParseError);

  write_text(tmp.path, "step,rmse_pos,rmse_ori,nees_pos,nees_ori\n1,0.5,0.1,1.9,0.9junk\n");
  CHECK_THROWS_AS(parse_results_csv(tmp.path), ParseError);

  write_text(tmp.path, "");
  CHECK_THROWS_AS(parse_results_csv(tmp.path), ParseError);

  CHECK_THROWS_AS(parse_results_csv("/tmp/tekf_no_such_file.csv"), ParseError);
}

TEST_CASE("JSON output carries version, config echo, and the joint NEES") {
  TrialConfig cfg = small_cl_config();
  cfg.steps = 6;
  const TrialMetrics m = run_monte_carlo(cfg);
  TempFile tmp("out.json");
  emit_results(m, cfg, tmp.path, ResultsFormat::Json);

  std::ifstream in(tmp.path);
  REQUIRE(in.good());
  const nlohmann::json j = nlohmann::json::parse(in);
  CHECK(j.contains("version"));
  CHECK(j["config"]["app"] == "cl");
  CHECK(j["config"]["estimator"] == "tekf2");
  CHECK(j["config"]["robots"] == 3);
  CHECK(j["trials_requested"] == 3);
  CHECK(j["trials_used"] == 3);
  CHECK(j["diverged_trials"] == 0);
  REQUIRE(j["steps"].is_array());
  REQUIRE(j["steps"].size() == 6);
  CHECK(j["steps"][0].contains("nees_joint"));
  CHECK(j["averages"].contains("nees_joint"));
  CHECK(j["steps"][2]["rmse_pos"].get<double>() ==
        Catch::Approx(m.steps[2].rmse_pos).epsilon(1e-12));
}

TEST_CASE("filter divergence is detected and flagged") {
  ClNoiseConfig cfg;
  cfg.detection_prob = 0.5;
  ClSimData sim = simulate_cl(3, cfg, 20, 42);
  REQUIRE(!sim.meas[5].empty());
  sim.meas[5][0].z = Eigen::Vector2d(1e7, 1e7);  // physically impossible sighting

  FilterSetup setup;
  setup.estimator = EstimatorKind::Ekf;
  const FilterRun run = run_cl_filter(sim, setup);
  CHECK(run.diverged);
  // The untouched simulation stays healthy.
  CHECK_FALSE(run_cl_filter(simulate_cl(3, cfg, 20, 42), setup).diverged);
}

TEST_CASE("transformed-coordinate covariances convert back to the reported ones") {
  ClNoiseConfig cfg;
  const ClSimData sim = simulate_cl(3, cfg, 10, 43);
  FilterSetup setup;
  setup.estimator = EstimatorKind::Tekf1;
  setup.transform = TransformKind::T2;
  const FilterRun run = run_cl_filter(sim, setup);
  REQUIRE(run.cov_bars.size() == run.covs.size());
  const Transformation trans = cl_transform_t2(3);
  for (std::size_t k = 0; k < run.covs.size(); ++k) {
    const Eigen::MatrixXd T_inv = trans.T_inv(run.means[k]);
    CHECK((run.covs[k] - T_inv * run.cov_bars[k] * T_inv.transpose()).norm() < 1e-10);
  }
}

TEST_CASE("per-step cost of the corrected filter exceeds the transformed-coordinate one") {
  // Isolate filter arithmetic: identical prebuilt models and measurement
  // sequences, medians over repeated timed loops.
  const int m = 6, steps = 300;
  ClNoiseConfig cfg;
  const ClSimData sim = simulate_cl(m, cfg, steps, 99);
  const Transformation trans = cl_transform_t2(m);

  std::vector<SystemModel> models;
  std::vector<NoiseSpec> noises;
  std::vector<Eigen::VectorXd> ys;
  for (int k = 0; k < steps; ++k) {
    std::vector<RobotPair> pairs;
    Eigen::VectorXd y(2 * sim.meas[k].size());
    for (std::size_t j = 0; j < sim.meas[k].size(); ++j) {
      pairs.push_back({sim.meas[k][j].observer, sim.meas[k][j].target});
      y.segment<2>(2 * j) = sim.meas[k][j].z;
    }
    models.push_back(cl_model(m, cfg, pairs));
    noises.push_back(cl_noise_spec(m, cfg, static_cast<int>(pairs.size())));
    ys.push_back(y);
  }

  auto time_tekf1 = [&]() {
    Tekf1State s = tekf1_init({sim.x0, Eigen::MatrixXd::Zero(3 * m, 3 * m)}, trans);
    const auto t0 = std::chrono::steady_clock::now();
    for (int k = 0; k < steps; ++k)
      s = tekf1_update(tekf1_predict(s, models[k], trans, sim.u[k], noises[k]), models[k],
                       trans, ys[k], noises[k], UpdateMode::Exact);
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  auto time_tekf2 = [&]() {
    Tekf2State s{{sim.x0, Eigen::MatrixXd::Zero(3 * m, 3 * m)}};
    const auto t0 = std::chrono::steady_clock::now();
    for (int k = 0; k < steps; ++k)
      s = tekf2_step(s, models[k], trans, sim.u[k], ys[k], noises[k], UpdateMode::Exact);
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  // Alternate the measurement order so slow drifts in machine load cannot
  // systematically favor either filter.
  std::vector<double> t1_times, t2_times;
  for (int rep = 0; rep < 9; ++rep) {
    if (rep % 2 == 0) {
      t1_times.push_back(time_tekf1());
      t2_times.push_back(time_tekf2());
    } else {
      t2_times.push_back(time_tekf2());
      t1_times.push_back(time_tekf1());
    }
  }
  std::sort(t1_times.begin(), t1_times.end());
  std::sort(t2_times.begin(), t2_times.end());
  CHECK(t2_times[4] > t1_times[4]);
}
