#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "tekf/cl.hpp"

namespace tekf {

struct UtiasOdometry {
  double time = 0.0;
  int robot = 0;  // 0-based
  double v = 0.0;
  double omega = 0.0;
};

struct UtiasMeasurement {
  double time = 0.0;
  int robot = 0;    // observer, 0-based
  int subject = 0;  // resolved from the barcode; robot index or landmark id
  bool target_is_robot = false;
  double range = 0.0;
  double bearing = 0.0;
};

struct UtiasGroundtruth {
  double time = 0.0;
  int robot = 0;
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
};

struct UtiasLandmark {
  int subject = 0;
  Eigen::Vector2d p{0.0, 0.0};
};

enum class UtiasEventKind { Groundtruth, Odometry, Measurement };

// Reference into the per-kind arrays, merged and time-sorted.
struct UtiasEvent {
  double time = 0.0;
  UtiasEventKind kind = UtiasEventKind::Odometry;
  size_t index = 0;
};

struct UtiasDataset {
  int robot_count = 0;
  std::vector<UtiasOdometry> odometry;
  std::vector<UtiasMeasurement> measurements;
  std::vector<UtiasGroundtruth> groundtruth;
  std::vector<UtiasLandmark> landmarks;  // Landmark_Groundtruth.dat, optional
  std::map<int, int> barcode_to_subject;
  std::vector<UtiasEvent> events;
  int dropped_measurements = 0;  // unknown barcodes
};

// Loads Robot{1..robot_count}_{Odometry,Measurement,Groundtruth}.dat plus
// Barcodes.dat and, when present, Landmark_Groundtruth.dat. Whitespace-separated
// columns; lines starting with '#' and blank lines are skipped. Malformed lines
// raise ParseError with file and line number; measurements whose barcode has no
// mapping are dropped and counted.
UtiasDataset utias_load(const std::string& dir, int robot_count);

// Range-bearing to an observer-frame relative position, with the first-order
// covariance A diag(sigma_r^2, sigma_b^2) A^T, A = d z / d (r, b).
RelPosMeasurement utias_to_relpos(const UtiasMeasurement& meas, double sigma_r,
                                  double sigma_b);

}  // namespace tekf
