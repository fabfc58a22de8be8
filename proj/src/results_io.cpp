#include "tekf/results_io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "tekf/errors.hpp"
#include "tekf/version.hpp"

namespace tekf {
namespace {

constexpr const char* kCsvHeader = "step,rmse_pos,rmse_ori,nees_pos,nees_ori";

void write_csv(const TrialMetrics& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  out << kCsvHeader << '\n' << std::setprecision(17);
  for (std::size_t k = 0; k < m.steps.size(); ++k) {
    const StepMetrics& s = m.steps[k];
    out << k + 1 << ',' << s.rmse_pos << ',' << s.rmse_ori << ',' << s.nees_pos << ','
        << s.nees_ori << '\n';
  }
  if (!out) throw ConfigError("write to '" + path + "' failed");
}

nlohmann::json config_echo(const TrialConfig& cfg) {
  nlohmann::json j;
  j["app"] = to_string(cfg.app);
  j["estimator"] = to_string(cfg.estimator);
  j["transform"] = to_string(cfg.transform);
  j["update_mode"] = to_string(cfg.update_mode);
  j["joseph_form"] = cfg.joseph_form;
  j["trials"] = cfg.trials;
  j["steps"] = cfg.steps;
  j["master_seed"] = cfg.master_seed;
  j["threads"] = cfg.threads;
  if (cfg.app == AppKind::Cl) {
    j["robots"] = cfg.robots;
    j["sigma_v"] = cfg.cl.sigma_v;
    j["sigma_omega"] = cfg.cl.sigma_omega;
    j["sigma_z"] = cfg.cl.sigma_z;
    j["dt"] = cfg.cl.dt;
    j["detection_prob"] = cfg.cl.detection_prob;
  } else {
    j["sigma_v"] = cfg.tt.sigma_v;
    j["sigma_omega"] = cfg.tt.sigma_omega;
    j["sigma_bearing"] = cfg.tt.sigma_bearing;
    j["dt"] = cfg.tt.dt;
    j["v"] = {cfg.tt.v.x(), cfg.tt.v.y()};
    j["omega"] = cfg.tt.omega;
    nlohmann::json lms = nlohmann::json::array();
    for (const Landmark& lm : cfg.landmarks.empty() ? tt_default_landmarks() : cfg.landmarks)
      lms.push_back({{"id", lm.id}, {"x", lm.p_s.x()}, {"y", lm.p_s.y()}});
    j["landmarks"] = lms;
  }
  return j;
}

void write_json(const TrialMetrics& m, const TrialConfig& cfg, const std::string& path) {
  nlohmann::json j;
  j["version"] = kVersion;
  j["config"] = config_echo(cfg);
  j["trials_requested"] = m.trials_requested;
  j["trials_used"] = m.trials_used;
  j["diverged_trials"] = m.diverged_trials;
  j["wall_ms_per_step"] = m.wall_ms_per_step;
  j["averages"] = {{"rmse_pos", m.avg_rmse_pos},
                   {"rmse_ori", m.avg_rmse_ori},
                   {"nees_pos", m.avg_nees_pos},
                   {"nees_ori", m.avg_nees_ori},
                   {"nees_joint", m.avg_nees_joint}};
  nlohmann::json steps = nlohmann::json::array();
  for (std::size_t k = 0; k < m.steps.size(); ++k) {
    const StepMetrics& s = m.steps[k];
    steps.push_back({{"step", k + 1},
                     {"rmse_pos", s.rmse_pos},
                     {"rmse_ori", s.rmse_ori},
                     {"nees_pos", s.nees_pos},
                     {"nees_ori", s.nees_ori},
                     {"nees_joint", m.nees_joint[k]}});
  }
  j["steps"] = steps;

  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw ConfigError("write to '" + path + "' failed");
}

}  // namespace

void emit_results(const TrialMetrics& metrics, const TrialConfig& cfg,
                  const std::string& path, ResultsFormat format) {
  if (format == ResultsFormat::Csv)
    write_csv(metrics, path);
  else
    write_json(metrics, cfg, path);
}

std::vector<StepMetrics> parse_results_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open file");
  std::string line;
  int lineno = 0;
  std::vector<StepMetrics> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (lineno == 1) {
      if (line != kCsvHeader) throw ParseError(path, 1, "unexpected header '" + line + "'");
      continue;
    }
    std::istringstream ss(line);
    std::string field;
    double vals[5];
    for (int i = 0; i < 5; ++i) {
      if (!std::getline(ss, field, ',')) throw ParseError(path, lineno, "too few columns");
      std::size_t pos = 0;
      try {
        vals[i] = std::stod(field, &pos);
      } catch (const std::exception&) {
        throw ParseError(path, lineno, "not a number: '" + field + "'");
      }
      if (pos != field.size()) throw ParseError(path, lineno, "trailing junk: '" + field + "'");
    }
    if (std::getline(ss, field, ',')) throw ParseError(path, lineno, "too many columns");
    StepMetrics s;
    s.rmse_pos = vals[1];
    s.rmse_ori = vals[2];
    s.nees_pos = vals[3];
    s.nees_ori = vals[4];
    rows.push_back(s);
  }
  if (lineno == 0) throw ParseError(path, 0, "empty file (expected a header)");
  return rows;
}

}  // namespace tekf
