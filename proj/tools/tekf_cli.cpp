// Command-line front end: simulation campaigns, dataset replay, and
// observability audits. Exit codes: 0 success, 2 configuration error,
// 3 when a majority of trials (or the replay) diverged.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "tekf/errors.hpp"
#include "tekf/monte_carlo.hpp"
#include "tekf/replay.hpp"
#include "tekf/results_io.hpp"
#include "tekf/version.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitDiverged = 3;

struct SimFlags {
  std::string estimator = "ekf";
  std::string transform;  // empty = pick the app default for the estimator
  std::string update_mode = "exact";
  std::string out;
  std::string format = "csv";
  int trials = 100;
  int steps = 300;
  std::uint64_t seed = 1;
  int threads = 0;
  bool joseph = false;
};

void add_sim_flags(CLI::App* cmd, SimFlags& f) {
  cmd->add_option("--trials", f.trials, "Monte Carlo trials");
  cmd->add_option("--steps", f.steps, "steps per trial");
  cmd->add_option("--seed", f.seed, "master seed (trial t uses seed + t)");
  cmd->add_option("--estimator", f.estimator, "ekf|fej|tekf1|tekf2|dr");
  cmd->add_option("--transform", f.transform, "identity|t1|t2|tt-default");
  cmd->add_option("--update-mode", f.update_mode, "exact|approximate");
  cmd->add_option("--threads", f.threads, "worker threads (0 = hardware)");
  cmd->add_flag("--joseph", f.joseph, "Joseph-form covariance update");
  cmd->add_option("--out", f.out, "output file (default: stdout summary only)");
  cmd->add_option("--format", f.format, "csv|json");
}

tekf::TrialConfig to_trial_config(const SimFlags& f, tekf::AppKind app) {
  tekf::TrialConfig cfg;
  cfg.app = app;
  cfg.estimator = tekf::estimator_from_string(f.estimator);
  if (f.transform.empty()) {
    const bool transformed = cfg.estimator == tekf::EstimatorKind::Tekf1 ||
                             cfg.estimator == tekf::EstimatorKind::Tekf2;
    cfg.transform = !transformed          ? tekf::TransformKind::Identity
                    : app == tekf::AppKind::Cl ? tekf::TransformKind::T2
                                               : tekf::TransformKind::TtDefault;
  } else {
    cfg.transform = tekf::transform_from_string(f.transform);
  }
  cfg.update_mode = tekf::update_mode_from_string(f.update_mode);
  cfg.joseph_form = f.joseph;
  cfg.trials = f.trials;
  cfg.steps = f.steps;
  cfg.master_seed = f.seed;
  cfg.threads = f.threads;
  return cfg;
}

tekf::ResultsFormat format_from_string(const std::string& s) {
  if (s == "csv") return tekf::ResultsFormat::Csv;
  if (s == "json") return tekf::ResultsFormat::Json;
  throw tekf::ConfigError("unknown format '" + s + "' (expected csv|json)");
}

int finish_sim(const tekf::TrialConfig& cfg, const SimFlags& f) {
  const tekf::TrialMetrics metrics = tekf::run_monte_carlo(cfg);
  if (!f.out.empty()) tekf::emit_results(metrics, cfg, f.out, format_from_string(f.format));
  std::cout << "trials " << metrics.trials_used << "/" << metrics.trials_requested
            << " (diverged " << metrics.diverged_trials << ")\n"
            << "avg rmse_pos " << metrics.avg_rmse_pos << " m, rmse_ori "
            << metrics.avg_rmse_ori << " rad\n"
            << "avg nees_pos " << metrics.avg_nees_pos << ", nees_ori "
            << metrics.avg_nees_ori << ", nees_joint " << metrics.avg_nees_joint << "\n"
            << "wall " << metrics.wall_ms_per_step << " ms/step\n";
  if (2 * metrics.diverged_trials > metrics.trials_requested) return kExitDiverged;
  return kExitOk;
}

int run_obs_audit(const std::string& model, std::uint64_t seed, int steps, int anchor,
                  int window, int robots, const std::string& out) {
  tekf::JacobianSequences est, nom;
  int n = 0;
  if (model == "cl") {
    tekf::ClNoiseConfig cfg;
    cfg.detection_prob = 1.0;  // audits want a measurement block every step
    n = 3 * robots;
    if (window <= 0) window = 4 * n;
    if (steps <= 0) steps = anchor + window;
    const tekf::ClSimData sim = tekf::simulate_cl(robots, cfg, steps, seed);
    est = tekf::cl_estimator_sequences(sim);
    nom = tekf::cl_nominal_sequences(sim);
  } else if (model == "tt") {
    n = 3;
    if (window <= 0) window = 4 * n;
    if (steps <= 0) steps = anchor + window;
    const tekf::TtSimData sim =
        tekf::simulate_tt(tekf::tt_default_landmarks(), tekf::TtConfig{}, steps, seed);
    est = tekf::tt_estimator_sequences(sim);
    nom = tekf::tt_nominal_sequences(sim);
  } else {
    throw tekf::ConfigError("unknown model '" + model + "' (expected cl|tt)");
  }
  if (anchor + window > steps)
    throw tekf::ConfigError("anchor + window exceeds the run length");

  const tekf::ObservabilityMatrix O_est = tekf::window_observability(est, anchor, window);
  const tekf::ObservabilityMatrix O_nom = tekf::window_observability(nom, anchor, window);
  const tekf::MismatchReport report = tekf::mismatch_report(O_nom, O_est);
  const tekf::SubspaceBasis ker_nom = tekf::kernel_basis(O_nom.rows);
  const tekf::SubspaceBasis ker_est = tekf::kernel_basis(O_est.rows);

  nlohmann::json j;
  j["version"] = tekf::kVersion;
  j["model"] = model;
  j["seed"] = seed;
  j["anchor"] = anchor;
  j["window"] = window;
  j["state_dim"] = n;
  j["dim_nominal"] = report.dim_nominal;
  j["dim_estimator"] = report.dim_estimator;
  j["principal_angles"] = tekf::principal_angles(ker_nom, ker_est);
  if (out.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    std::ofstream os(out);
    if (!os) throw tekf::ConfigError("cannot open '" + out + "' for writing");
    os << j.dump(2) << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"transformed-EKF estimation toolkit"};
  app.set_version_flag("--version", std::string(tekf::kVersion));
  app.set_config("--config", "",
                 "INI config file; subcommand options go under a [sim-cl] style "
                 "section header, and flags override the file");
  // A misspelled or misplaced key silently running with defaults is worse
  // than an error, so unrecognized config entries abort.
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);

  SimFlags cl_flags, tt_flags;
  int cl_robots = 6;
  double detect_prob = 0.20;
  CLI::App* sim_cl = app.add_subcommand("sim-cl", "fleet localization Monte Carlo");
  add_sim_flags(sim_cl, cl_flags);
  sim_cl->add_option("--robots", cl_robots, "fleet size");
  sim_cl->add_option("--detect-prob", detect_prob, "pairwise detection probability");

  CLI::App* sim_tt = app.add_subcommand("sim-tt", "bearing-only target tracking Monte Carlo");
  add_sim_flags(sim_tt, tt_flags);
  int tt_switch_period = 1;
  sim_tt->add_option("--switch-period", tt_switch_period,
                     "steps each landmark holds before the next takes over");

  std::string replay_dir, replay_app = "cl", replay_est = "ekf", replay_trans,
                          replay_mode = "exact", replay_out;
  int replay_robots = 5, replay_robot_index = 0;
  bool use_landmarks = false;
  CLI::App* replay = app.add_subcommand("replay-utias", "replay a recorded dataset");
  replay->add_option("--dir", replay_dir, "dataset directory")->required();
  replay->add_option("--robots", replay_robots, "robots in the dataset");
  replay->add_option("--app", replay_app, "cl|tt");
  replay->add_option("--estimator", replay_est, "ekf|fej|tekf1|tekf2|dr");
  replay->add_option("--transform", replay_trans, "identity|t1|t2|tt-default");
  replay->add_option("--update-mode", replay_mode, "exact|approximate");
  replay->add_option("--robot-index", replay_robot_index, "tracked robot (tt mode)");
  replay->add_flag("--use-landmarks", use_landmarks, "fuse surveyed-landmark sightings");
  replay->add_option("--out", replay_out, "JSON report path");

  std::string audit_model = "cl", audit_out;
  std::uint64_t audit_seed = 1;
  int audit_steps = 0, audit_anchor = 1, audit_window = 0, audit_robots = 3;
  CLI::App* audit = app.add_subcommand("obs-audit", "observability mismatch report");
  audit->add_option("--model", audit_model, "cl|tt");
  audit->add_option("--seed", audit_seed, "trial seed");
  audit->add_option("--steps", audit_steps, "run length (0 = anchor + window)");
  audit->add_option("--anchor", audit_anchor, "window start step (1-based)");
  audit->add_option("--window", audit_window, "window length (0 = 4n)");
  audit->add_option("--robots", audit_robots, "fleet size (cl model)");
  audit->add_option("--out", audit_out, "JSON report path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (sim_cl->parsed()) {
      tekf::TrialConfig cfg = to_trial_config(cl_flags, tekf::AppKind::Cl);
      cfg.robots = cl_robots;
      cfg.cl.detection_prob = detect_prob;
      return finish_sim(cfg, cl_flags);
    }
    if (sim_tt->parsed()) {
      tekf::TrialConfig cfg = to_trial_config(tt_flags, tekf::AppKind::Tt);
      cfg.tt.switch_period = tt_switch_period;
      return finish_sim(cfg, tt_flags);
    }
    if (replay->parsed()) {
      tekf::ReplayConfig cfg;
      cfg.app = tekf::app_from_string(replay_app);
      cfg.estimator = tekf::estimator_from_string(replay_est);
      if (replay_trans.empty()) {
        const bool transformed = cfg.estimator == tekf::EstimatorKind::Tekf1 ||
                                 cfg.estimator == tekf::EstimatorKind::Tekf2;
        cfg.transform = !transformed ? tekf::TransformKind::Identity
                        : cfg.app == tekf::AppKind::Cl ? tekf::TransformKind::T2
                                                       : tekf::TransformKind::TtDefault;
      } else {
        cfg.transform = tekf::transform_from_string(replay_trans);
      }
      cfg.update_mode = tekf::update_mode_from_string(replay_mode);
      cfg.use_landmarks = use_landmarks;
      cfg.robot_index = replay_robot_index;
      const tekf::UtiasDataset ds = tekf::utias_load(replay_dir, replay_robots);
      const tekf::ReplayResult res = tekf::replay_utias(ds, cfg);

      nlohmann::json j;
      j["version"] = tekf::kVersion;
      j["robots"] = ds.robot_count;
      j["dropped_unknown_barcode"] = ds.dropped_measurements;
      j["odometry_events"] = res.odometry_events;
      j["measurements_used"] = res.measurements_used;
      j["measurements_skipped"] = res.measurements_skipped;
      j["groundtruth_samples"] = res.groundtruth_samples;
      j["duration_s"] = res.duration;
      j["rmse_pos"] = res.rmse_pos;
      j["rmse_ori"] = res.rmse_ori;
      j["diverged"] = res.diverged;
      if (replay_out.empty()) {
        std::cout << j.dump(2) << "\n";
      } else {
        std::ofstream os(replay_out);
        if (!os) throw tekf::ConfigError("cannot open '" + replay_out + "' for writing");
        os << j.dump(2) << "\n";
      }
      return res.diverged ? kExitDiverged : kExitOk;
    }
    if (audit->parsed()) {
      return run_obs_audit(audit_model, audit_seed, audit_steps, audit_anchor, audit_window,
                           audit_robots, audit_out);
    }
  } catch (const tekf::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}
