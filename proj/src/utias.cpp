#include "tekf/utias.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "tekf/angles.hpp"
#include "tekf/errors.hpp"

namespace tekf {

namespace {

// Parses exactly n_cols doubles from each data line of the file and hands them
// to sink(line_number, values). Skips '#' comments and blank lines.
void parse_columns(const std::string& path, int n_cols,
                   const std::function<void(int, const std::vector<double>&)>& sink,
                   bool required = true) {
  std::ifstream in(path);
  if (!in) {
    if (required) throw ParseError(path, 0, "cannot open file");
    return;
  }
  std::string line;
  int line_no = 0;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++line_no;
    const size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ss(line);
    values.clear();
    double v = 0.0;
    while (ss >> v) values.push_back(v);
    if (!ss.eof())
      throw ParseError(path, line_no, "non-numeric token");
    if (static_cast<int>(values.size()) < n_cols)
      throw ParseError(path, line_no,
                       "expected " + std::to_string(n_cols) + " columns, got " +
                           std::to_string(values.size()));
    sink(line_no, values);
  }
}

std::string robot_file(const std::string& dir, int robot_1based, const char* kind) {
  return dir + "/Robot" + std::to_string(robot_1based) + "_" + kind + ".dat";
}

}  // namespace

UtiasDataset utias_load(const std::string& dir, int robot_count) {
  if (robot_count < 1) throw ContractViolation("robot count must be positive");
  UtiasDataset ds;
  ds.robot_count = robot_count;

  parse_columns(dir + "/Barcodes.dat", 2, [&](int, const std::vector<double>& v) {
    ds.barcode_to_subject[static_cast<int>(v[1])] = static_cast<int>(v[0]);
  });

  parse_columns(
      dir + "/Landmark_Groundtruth.dat", 3,
      [&](int, const std::vector<double>& v) {
        ds.landmarks.push_back({static_cast<int>(v[0]), Eigen::Vector2d(v[1], v[2])});
      },
      /*required=*/false);

  for (int r = 0; r < robot_count; ++r) {
    parse_columns(robot_file(dir, r + 1, "Odometry"), 3,
                  [&](int, const std::vector<double>& v) {
                    ds.odometry.push_back({v[0], r, v[1], v[2]});
                  });
    parse_columns(robot_file(dir, r + 1, "Groundtruth"), 4,
                  [&](int, const std::vector<double>& v) {
                    ds.groundtruth.push_back({v[0], r, v[1], v[2], v[3]});
                  });
    parse_columns(robot_file(dir, r + 1, "Measurement"), 4,
                  [&](int, const std::vector<double>& v) {
                    const int barcode = static_cast<int>(v[1]);
                    const auto it = ds.barcode_to_subject.find(barcode);
                    if (it == ds.barcode_to_subject.end()) {
                      ++ds.dropped_measurements;
                      return;
                    }
                    UtiasMeasurement m;
                    m.time = v[0];
                    m.robot = r;
                    // Subjects 1..robot_count are robots, the rest landmarks.
                    m.target_is_robot = it->second >= 1 && it->second <= robot_count;
                    m.subject = m.target_is_robot ? it->second - 1 : it->second;
                    m.range = v[2];
                    m.bearing = v[3];
                    ds.measurements.push_back(m);
                  });
  }

  ds.events.reserve(ds.groundtruth.size() + ds.odometry.size() + ds.measurements.size());
  for (size_t i = 0; i < ds.groundtruth.size(); ++i)
    ds.events.push_back({ds.groundtruth[i].time, UtiasEventKind::Groundtruth, i});
  for (size_t i = 0; i < ds.odometry.size(); ++i)
    ds.events.push_back({ds.odometry[i].time, UtiasEventKind::Odometry, i});
  for (size_t i = 0; i < ds.measurements.size(); ++i)
    ds.events.push_back({ds.measurements[i].time, UtiasEventKind::Measurement, i});
  std::stable_sort(ds.events.begin(), ds.events.end(),
                   [](const UtiasEvent& a, const UtiasEvent& b) {
                     if (a.time != b.time) return a.time < b.time;
                     return static_cast<int>(a.kind) < static_cast<int>(b.kind);
                   });
  return ds;
}

RelPosMeasurement utias_to_relpos(const UtiasMeasurement& meas, double sigma_r,
                                  double sigma_b) {
  const double c = std::cos(meas.bearing);
  const double s = std::sin(meas.bearing);
  RelPosMeasurement out;
  out.observer = meas.robot;
  out.target = meas.target_is_robot ? meas.subject : -1;
  out.z = meas.range * Eigen::Vector2d(c, s);
  Eigen::Matrix2d A;
  A << c, -meas.range * s, s, meas.range * c;
  out.R = A * Eigen::Vector2d(sigma_r * sigma_r, sigma_b * sigma_b).asDiagonal() *
          A.transpose();
  return out;
}

}  // namespace tekf
