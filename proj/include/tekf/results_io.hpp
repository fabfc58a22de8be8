#pragma once

#include <string>
#include <vector>

#include "tekf/monte_carlo.hpp"

namespace tekf {

enum class ResultsFormat { Csv, Json };

// CSV: header `step,rmse_pos,rmse_ori,nees_pos,nees_ori`, one row per step,
// full double precision. JSON mirrors the series, adds the joint NEES, the
// averages, a config echo, and the build version string.
void emit_results(const TrialMetrics& metrics, const TrialConfig& cfg,
                  const std::string& path, ResultsFormat format);

// Reads a CSV produced by emit_results. Throws ParseError with the offending
// line on malformed input.
std::vector<StepMetrics> parse_results_csv(const std::string& path);

}  // namespace tekf
