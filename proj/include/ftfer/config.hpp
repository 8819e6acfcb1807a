#pragma once

// JSON experiment configuration. Every object is validated before any work
// starts and unknown keys are rejected.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ftfer/data.hpp"
#include "ftfer/harness.hpp"

namespace ftfer::config {

struct DatasetFiles {
  std::filesystem::path edges;
  std::filesystem::path features;
  std::filesystem::path labels;
};

// Exactly one of sbm / files is set.
struct DatasetSource {
  std::optional<data::SbmConfig> sbm;
  std::optional<DatasetFiles> files;
};

// Empty axes fall back to the single value in `run`.
struct SweepAxes {
  std::vector<double> beta;
  std::vector<std::uint64_t> seed;
  std::vector<harness::Method> method;
};

struct ExperimentConfig {
  DatasetSource dataset;
  harness::RunConfig run;
  SweepAxes sweep;
  std::filesystem::path output_dir;
  std::size_t workers = 1;
};

// Relative dataset file paths are resolved against base_dir. Throws
// InvalidArgument naming the offending key.
ExperimentConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& file);

data::SbmConfig parse_sbm(const nlohmann::json& obj);
harness::RunConfig parse_run(const nlohmann::json& obj);

nlohmann::json to_json(const data::SbmConfig& cfg);
nlohmann::json to_json(const harness::RunConfig& cfg);

// Generated or loaded, then preprocessed.
data::DatasetBundle materialize(const DatasetSource& source);

// Cartesian product method x beta x seed, in that nesting order.
std::vector<harness::RunConfig> expand_sweep(const ExperimentConfig& cfg);

// Directory name of one sweep cell, e.g. "method=ftf_er_beta=0.5_seed=3".
std::string cell_name(const harness::RunConfig& cfg);

}  // namespace ftfer::config
