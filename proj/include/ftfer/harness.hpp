#pragma once

// Class-incremental continual learning harness: task partitioning, per-class
// splits, the replay training loop, baselines and AA / AF metrics.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ftfer/data.hpp"
#include "ftfer/gnn.hpp"
#include "ftfer/graph.hpp"
#include "ftfer/hodge.hpp"
#include "ftfer/replay.hpp"

namespace ftfer::harness {

enum class Method { ftf_er, fine_tune, joint, random_replay, mf_replay };
enum class Sampler { deterministic, probabilistic };
enum class HpsScope { task, global };

std::string_view to_string(Method m);
std::string_view to_string(Sampler s);
std::string_view to_string(HpsScope s);
Method parse_method(std::string_view name);
Sampler parse_sampler(std::string_view name);
HpsScope parse_hps_scope(std::string_view name);

bool uses_buffer(Method m);

struct RunConfig {
  Method method = Method::ftf_er;
  Sampler sampler = Sampler::deterministic;
  std::size_t budget = 10;  // nodes per class per task
  double beta = 0.5;
  double lambda = 1.0;
  HpsScope hps_scope = HpsScope::task;
  std::size_t classes_per_task = 2;
  gnn::ModelConfig model;  // model.seed is derived from seed by the harness
  hodge::SolverConfig solver;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class Role : std::uint8_t { train, val, test };

struct Split {
  std::vector<Role> roles;  // per node
};

// Per class: seeded shuffle, then floor(0.6 m) train, floor(0.2 m) val, rest
// test. Throws InvalidArgument if a class has fewer than 5 nodes.
Split split_nodes(std::span<const Label> labels, std::uint64_t seed);

struct Task {
  std::vector<Label> classes;
  NodeSet nodes;      // dataset ids
  Subgraph subgraph;  // induced task graph with features and labels
};

struct TaskSequence {
  std::vector<Task> tasks;
  std::size_t num_classes = 0;
};

// Groups classes in class_order (ascending ids when empty) into tasks of
// classes_per_task; a final smaller task takes any remainder.
TaskSequence partition_tasks(const Graph& g, std::size_t classes_per_task,
                             std::span<const Label> class_order = {});

// Lower-triangular record; entry (i, j) = accuracy on task j after training task i.
class AccuracyMatrix {
 public:
  AccuracyMatrix() = default;
  explicit AccuracyMatrix(std::size_t num_tasks);

  std::size_t size() const noexcept { return k_; }
  void set(std::size_t i, std::size_t j, double value);
  std::optional<double> at(std::size_t i, std::size_t j) const;

  // K lines of K comma-separated cells; undefined cells are empty.
  std::string to_csv() const;
  static AccuracyMatrix from_csv(std::string_view text);

  bool operator==(const AccuracyMatrix&) const = default;

 private:
  std::size_t k_ = 0;
  std::vector<double> values_;
  std::vector<char> defined_;
};

// Mean of the last row. Throws InvalidArgument if a cell is undefined.
double average_accuracy(const AccuracyMatrix& m);
// Mean over i < K of M(K, i) - M(i, i); 0 when K = 1.
double average_forgetting(const AccuracyMatrix& m);

struct TaskTimings {
  double train_seconds = 0.0;
  double scoring_seconds = 0.0;
  double eval_seconds = 0.0;
};

struct RunResult {
  RunConfig config;
  AccuracyMatrix matrix;
  double average_accuracy = 0.0;
  std::optional<double> average_forgetting;  // undefined for joint training
  std::vector<replay::BufferStats> buffer_stats;  // after each task
  std::vector<std::size_t> visible_classes;       // per evaluated row
  double preprocess_seconds = 0.0;
  std::vector<TaskTimings> task_timings;
};

// Expected buffer size after `tasks_done` tasks: sum over classes of
// min(budget, class train size).
std::size_t expected_buffer_size(const TaskSequence& tasks, const Split& split, std::size_t budget,
                                 std::size_t tasks_done);

// Runs the continual loop for every method except joint. `dataset` must be preprocessed.
RunResult run_continual(const RunConfig& cfg, const data::DatasetBundle& dataset);
// One model on all training nodes of the full graph; fills the last matrix row only.
RunResult run_joint(const RunConfig& cfg, const data::DatasetBundle& dataset);
// Dispatches on cfg.method.
RunResult run(const RunConfig& cfg, const data::DatasetBundle& dataset);

// splitmix64 of (master, stream, index); used for every derived RNG seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index = 0);

// Streams passed to derive_seed; index is the task for per-task draws.
enum SeedStream : std::uint64_t { kSplitStream = 1, kModelStream = 2, kSamplerStream = 3, kBaselineStream = 4 };

}  // namespace ftfer::harness
