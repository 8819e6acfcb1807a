#pragma once

// Run directories: matrix.csv, summary.json and timings.json, plus the
// recomputation check behind the report command.

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "ftfer/harness.hpp"

namespace ftfer::report {

inline constexpr double kConsistencyTolerance = 1e-9;

// Deterministic content only. Wall-clock times live in timings.json so that a
// repeated run reproduces summary.json byte for byte.
nlohmann::json summary_json(const harness::RunResult& result, const std::string& dataset_name);
nlohmann::json timings_json(const harness::RunResult& result);

// Creates dir if needed and writes the three files.
void write_run_dir(const harness::RunResult& result, const std::string& dataset_name,
                   const std::filesystem::path& dir);

struct RunDirReport {
  harness::AccuracyMatrix matrix;
  double average_accuracy = 0.0;
  std::optional<double> average_forgetting;
  nlohmann::json summary;
  std::optional<nlohmann::json> timings;  // absent when timings.json is missing
};

// Recomputes AA / AF from matrix.csv and compares them and the stored matrix
// with summary.json. Throws ConsistencyError on disagreement beyond tolerance.
RunDirReport check_run_dir(const std::filesystem::path& dir, double tolerance = kConsistencyTolerance);

// Human-readable table of metrics, buffer sizes and timings.
std::string format_report(const RunDirReport& report);

std::string read_text(const std::filesystem::path& file);
void write_text(const std::filesystem::path& file, const std::string& text);

}  // namespace ftfer::report
