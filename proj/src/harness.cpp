#include "ftfer/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "ftfer/error.hpp"
#include "ftfer/io.hpp"
#include "ftfer/scoring.hpp"

namespace ftfer::harness {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Everything a run needs that does not change while training.
struct PreparedTask {
  const Task* task = nullptr;
  gnn::PropagationMatrix propagation;
  std::vector<NodeId> train;  // task-local ids
  std::vector<NodeId> test;
  hodge::PotentialScores potential;  // on the task graph
};

std::vector<NodeId> local_with_role(const Task& t, const Split& split, Role role) {
  std::vector<NodeId> out;
  for (std::size_t i = 0; i < t.subgraph.ids.new_to_old.size(); ++i) {
    if (split.roles[t.subgraph.ids.new_to_old[i]] == role) out.push_back(static_cast<NodeId>(i));
  }
  return out;
}

void require_preprocessed(const data::DatasetBundle& dataset) {
  const Graph& g = dataset.graph;
  if (g.directed()) throw InvalidArgument("dataset must be preprocessed (undirected)");
  if (!g.features() || !g.labels()) throw InvalidArgument("dataset needs features and labels");
}

gnn::ClassMask mask_for(const TaskSequence& seq, std::size_t through_task) {
  gnn::ClassMask mask(seq.num_classes);
  for (std::size_t t = 0; t <= through_task; ++t) {
    for (Label c : seq.tasks[t].classes) mask.show(c);
  }
  return mask;
}

double task_accuracy(const gnn::GnnModel& model, const PreparedTask& pt, const gnn::ClassMask& mask) {
  const Graph& g = pt.task->subgraph.graph;
  return gnn::evaluate_accuracy(model, gnn::LabeledNodes{pt.propagation, *g.features(), *g.labels(), pt.test},
                                mask);
}

scoring::ScoreVector selection_scores(const RunConfig& cfg, const gnn::GnnModel& model,
                                      const PreparedTask& pt, const gnn::ClassMask& mask,
                                      std::size_t task_index) {
  const Graph& g = pt.task->subgraph.graph;
  switch (cfg.method) {
    case Method::ftf_er: {
      const auto loss = scoring::grand_scores(
          model, gnn::LabeledNodes{pt.propagation, *g.features(), *g.labels(), pt.train}, mask);
      const auto topo = scoring::topo_scores(pt.potential, pt.train);
      return scoring::fuse_scores(loss, topo, scoring::FusionConfig{cfg.beta});
    }
    case Method::random_replay:
      return scoring::baseline_scores(scoring::BaselineKind::random, g, pt.train,
                                      derive_seed(cfg.seed, kBaselineStream, task_index));
    case Method::mf_replay:
      return scoring::baseline_scores(scoring::BaselineKind::mean_of_feature, g, pt.train, 0);
    default:
      throw InvalidArgument("method does not select replay nodes");
  }
}

struct Prepared {
  Split split;
  TaskSequence sequence;
  std::vector<PreparedTask> tasks;
};

Prepared prepare(const RunConfig& cfg, const data::DatasetBundle& dataset, bool need_potential) {
  require_preprocessed(dataset);
  const Graph& g = dataset.graph;
  Prepared p;
  p.split = split_nodes(*g.labels(), derive_seed(cfg.seed, kSplitStream));
  p.sequence = partition_tasks(g, cfg.classes_per_task);

  hodge::PotentialScores global;
  if (need_potential && cfg.hps_scope == HpsScope::global) global = hodge::hodge_potential_score(g, cfg.solver);

  p.tasks.resize(p.sequence.tasks.size());
  for (std::size_t t = 0; t < p.sequence.tasks.size(); ++t) {
    PreparedTask& pt = p.tasks[t];
    pt.task = &p.sequence.tasks[t];
    pt.propagation = gnn::propagation_for(pt.task->subgraph.graph, cfg.model.backbone);
    pt.train = local_with_role(*pt.task, p.split, Role::train);
    pt.test = local_with_role(*pt.task, p.split, Role::test);
    if (pt.train.empty()) throw InvalidArgument("task " + std::to_string(t) + " has no training nodes");
    if (pt.test.empty()) throw InvalidArgument("task " + std::to_string(t) + " has no test nodes");
    if (!need_potential) continue;
    if (cfg.hps_scope == HpsScope::task) {
      pt.potential = hodge::hodge_potential_score(pt.task->subgraph.graph, cfg.solver);
    } else {
      pt.potential.values.resize(pt.task->subgraph.graph.num_nodes());
      for (std::size_t i = 0; i < pt.potential.values.size(); ++i) {
        pt.potential.values[i] = global.values[pt.task->subgraph.ids.new_to_old[i]];
      }
      pt.potential.mean_zero_per_component = false;
    }
  }
  return p;
}

gnn::ModelConfig model_config(const RunConfig& cfg) {
  gnn::ModelConfig m = cfg.model;
  m.seed = derive_seed(cfg.seed, kModelStream);
  return m;
}

}  // namespace

std::string_view to_string(Method m) {
  switch (m) {
    case Method::ftf_er: return "ftf_er";
    case Method::fine_tune: return "fine_tune";
    case Method::joint: return "joint";
    case Method::random_replay: return "random_replay";
    case Method::mf_replay: return "mf_replay";
  }
  return "unknown";
}

std::string_view to_string(Sampler s) { return s == Sampler::deterministic ? "deterministic" : "probabilistic"; }
std::string_view to_string(HpsScope s) { return s == HpsScope::task ? "task" : "global"; }

Method parse_method(std::string_view name) {
  for (Method m : {Method::ftf_er, Method::fine_tune, Method::joint, Method::random_replay, Method::mf_replay}) {
    if (to_string(m) == name) return m;
  }
  throw InvalidArgument("unknown method '" + std::string(name) + "'");
}

Sampler parse_sampler(std::string_view name) {
  if (name == "deterministic") return Sampler::deterministic;
  if (name == "probabilistic") return Sampler::probabilistic;
  throw InvalidArgument("unknown sampler '" + std::string(name) + "'");
}

HpsScope parse_hps_scope(std::string_view name) {
  if (name == "task") return HpsScope::task;
  if (name == "global") return HpsScope::global;
  throw InvalidArgument("unknown hps_scope '" + std::string(name) + "'");
}

bool uses_buffer(Method m) {
  return m == Method::ftf_er || m == Method::random_replay || m == Method::mf_replay;
}

void RunConfig::validate() const {
  model.validate();
  if (uses_buffer(method) && budget < 1) throw InvalidArgument("budget must be >= 1 for replay methods");
  if (!(beta >= 0.0 && beta <= 1.0)) throw InvalidArgument("beta must lie in [0, 1]");
  if (!(lambda >= 0.0)) throw InvalidArgument("lambda must be >= 0");
  if (classes_per_task < 1) throw InvalidArgument("classes_per_task must be >= 1");
  if (!(solver.tolerance > 0.0)) throw InvalidArgument("solver tolerance must be > 0");
  if (model.epochs < 1) throw InvalidArgument("epochs must be >= 1");
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
  std::uint64_t z = master ^ (stream * 0x9e3779b97f4a7c15ULL) ^ (index * 0xd1b54a32d192ed03ULL);
  for (int round = 0; round < 2; ++round) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z ^= z >> 31;
  }
  return z;
}

Split split_nodes(std::span<const Label> labels, std::uint64_t seed) {
  std::map<Label, std::vector<NodeId>> by_class;
  for (std::size_t v = 0; v < labels.size(); ++v) by_class[labels[v]].push_back(static_cast<NodeId>(v));
  Split split;
  split.roles.assign(labels.size(), Role::test);
  for (auto& [label, nodes] : by_class) {
    if (nodes.size() < 5) {
      throw InvalidArgument("class " + std::to_string(label) + " has " + std::to_string(nodes.size()) +
                            " nodes; at least 5 are needed for a 6:2:2 split");
    }
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(label)};
    std::mt19937_64 rng(seq);
    std::shuffle(nodes.begin(), nodes.end(), rng);
    const std::size_t m = nodes.size();
    const std::size_t n_train = (6 * m) / 10;
    const std::size_t n_val = (2 * m) / 10;
    for (std::size_t i = 0; i < m; ++i) {
      split.roles[nodes[i]] = i < n_train ? Role::train : (i < n_train + n_val ? Role::val : Role::test);
    }
  }
  return split;
}

TaskSequence partition_tasks(const Graph& g, std::size_t classes_per_task,
                             std::span<const Label> class_order) {
  if (!g.labels()) throw InvalidArgument("partition_tasks: graph has no labels");
  if (classes_per_task < 1) throw InvalidArgument("classes_per_task must be >= 1");
  const auto& labels = *g.labels();
  TaskSequence seq;
  seq.num_classes = labels.empty() ? 0 : static_cast<std::size_t>(*std::max_element(labels.begin(), labels.end())) + 1;

  std::vector<Label> order(class_order.begin(), class_order.end());
  if (order.empty()) {
    order.resize(seq.num_classes);
    std::iota(order.begin(), order.end(), Label{0});
  }
  std::vector<std::vector<NodeId>> members(seq.num_classes);
  for (std::size_t v = 0; v < labels.size(); ++v) members[static_cast<std::size_t>(labels[v])].push_back(static_cast<NodeId>(v));
  std::vector<char> used(seq.num_classes, 0);
  for (Label c : order) {
    if (c < 0 || static_cast<std::size_t>(c) >= seq.num_classes || used[c]) {
      throw InvalidArgument("class order must list distinct existing classes");
    }
    if (members[c].empty()) throw InvalidArgument("class " + std::to_string(c) + " is empty");
    used[c] = 1;
  }
  if (order.size() != seq.num_classes) throw InvalidArgument("class order must cover every class");

  for (std::size_t start = 0; start < order.size(); start += classes_per_task) {
    Task t;
    std::vector<NodeId> nodes;
    for (std::size_t k = start; k < std::min(order.size(), start + classes_per_task); ++k) {
      t.classes.push_back(order[k]);
      nodes.insert(nodes.end(), members[order[k]].begin(), members[order[k]].end());
    }
    t.nodes = NodeSet(std::move(nodes));
    t.subgraph = induced_subgraph(g, t.nodes);
    seq.tasks.push_back(std::move(t));
  }
  return seq;
}

AccuracyMatrix::AccuracyMatrix(std::size_t num_tasks)
    : k_(num_tasks), values_(num_tasks * num_tasks, 0.0), defined_(num_tasks * num_tasks, 0) {}

void AccuracyMatrix::set(std::size_t i, std::size_t j, double value) {
  if (i >= k_ || j > i) throw InvalidArgument("accuracy matrix cell outside the lower triangle");
  if (!(value >= 0.0 && value <= 1.0)) throw InvalidArgument("accuracy must lie in [0, 1]");
  values_[i * k_ + j] = value;
  defined_[i * k_ + j] = 1;
}

std::optional<double> AccuracyMatrix::at(std::size_t i, std::size_t j) const {
  if (i >= k_ || j >= k_ || !defined_[i * k_ + j]) return std::nullopt;
  return values_[i * k_ + j];
}

std::string AccuracyMatrix::to_csv() const {
  std::string out;
  for (std::size_t i = 0; i < k_; ++i) {
    for (std::size_t j = 0; j < k_; ++j) {
      if (j > 0) out += ',';
      if (auto v = at(i, j)) out += io::format_double(*v);
    }
    out += '\n';
  }
  return out;
}

AccuracyMatrix AccuracyMatrix::from_csv(std::string_view text) {
  std::vector<std::vector<std::optional<double>>> rows;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::optional<double>> row;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      const std::string cell = line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      if (cell.empty()) {
        row.push_back(std::nullopt);
      } else {
        std::size_t used = 0;
        double v = 0.0;
        try {
          v = std::stod(cell, &used);
        } catch (const std::exception&) {
          used = 0;
        }
        if (used != cell.size()) throw ParseError("matrix.csv", rows.size() + 1, "bad cell '" + cell + "'");
        row.push_back(v);
      }
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    rows.push_back(std::move(row));
  }
  AccuracyMatrix m(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.size()) throw ParseError("matrix.csv", i + 1, "matrix is not square");
    for (std::size_t j = 0; j < rows.size(); ++j) {
      if (rows[i][j]) m.set(i, j, *rows[i][j]);
    }
  }
  return m;
}

double average_accuracy(const AccuracyMatrix& m) {
  const std::size_t k = m.size();
  if (k == 0) throw InvalidArgument("average_accuracy: empty matrix");
  double sum = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    const auto v = m.at(k - 1, j);
    if (!v) throw InvalidArgument("average_accuracy: last row has an undefined cell");
    sum += *v;
  }
  return sum / static_cast<double>(k);
}

double average_forgetting(const AccuracyMatrix& m) {
  const std::size_t k = m.size();
  if (k == 0) throw InvalidArgument("average_forgetting: empty matrix");
  if (k == 1) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < k; ++i) {
    const auto last = m.at(k - 1, i);
    const auto diag = m.at(i, i);
    if (!last || !diag) throw InvalidArgument("average_forgetting: required cell undefined");
    sum += *last - *diag;
  }
  return sum / static_cast<double>(k - 1);
}

std::size_t expected_buffer_size(const TaskSequence& tasks, const Split& split, std::size_t budget,
                                 std::size_t tasks_done) {
  std::size_t total = 0;
  for (std::size_t t = 0; t < tasks_done && t < tasks.tasks.size(); ++t) {
    const Task& task = tasks.tasks[t];
    std::map<Label, std::size_t> train_per_class;
    for (std::size_t i = 0; i < task.subgraph.ids.new_to_old.size(); ++i) {
      if (split.roles[task.subgraph.ids.new_to_old[i]] == Role::train) {
        ++train_per_class[(*task.subgraph.graph.labels())[i]];
      }
    }
    for (const auto& [c, count] : train_per_class) total += std::min(budget, count);
  }
  return total;
}

RunResult run_continual(const RunConfig& cfg, const data::DatasetBundle& dataset) {
  cfg.validate();
  if (cfg.method == Method::joint) throw InvalidArgument("run_continual does not run joint training");
  const auto t0 = Clock::now();
  const bool ftf = cfg.method == Method::ftf_er;
  Prepared p = prepare(cfg, dataset, ftf);
  const std::size_t k = p.tasks.size();

  RunResult result;
  result.config = cfg;
  result.matrix = AccuracyMatrix(k);
  result.preprocess_seconds = seconds_since(t0);

  gnn::GnnModel model = gnn::GnnModel::create(dataset.graph.feature_dim(), p.sequence.num_classes, model_config(cfg));
  replay::ExperienceBuffer buffer;
  gnn::PropagationMatrix buffer_propagation;

  for (std::size_t i = 0; i < k; ++i) {
    const PreparedTask& pt = p.tasks[i];
    const Graph& g = pt.task->subgraph.graph;
    const gnn::ClassMask mask = mask_for(p.sequence, i);
    TaskTimings timing;

    auto start = Clock::now();
    gnn::AdamState adam = gnn::make_adam_state(model);
    const gnn::LabeledNodes batch{pt.propagation, *g.features(), *g.labels(), pt.train};
    for (std::size_t epoch = 0; epoch < cfg.model.epochs; ++epoch) {
      const auto lg = replay::combined_loss(model, batch, buffer, buffer_propagation, cfg.lambda, mask);
      gnn::adam_step(model, lg.grads, adam, cfg.model.learning_rate);
    }
    timing.train_seconds = seconds_since(start);

    start = Clock::now();
    if (uses_buffer(cfg.method)) {
      const auto scores = selection_scores(cfg, model, pt, mask, i);
      const NodeSet selected =
          (ftf && cfg.sampler == Sampler::probabilistic)
              ? scoring::select_probabilistic(scores, *g.labels(), cfg.budget,
                                              derive_seed(cfg.seed, kSamplerStream, i))
              : scoring::select_deterministic(scores, *g.labels(), cfg.budget);
      buffer = replay::update_buffer(buffer, g, pt.task->subgraph.ids.new_to_old, selected, static_cast<int>(i));
      buffer_propagation = gnn::propagation_for(buffer.graph(), cfg.model.backbone);
      const std::size_t expected = expected_buffer_size(p.sequence, p.split, cfg.budget, i + 1);
      if (buffer.size() != expected) {
        throw ConsistencyError("buffer holds " + std::to_string(buffer.size()) + " nodes after task " +
                               std::to_string(i) + ", expected " + std::to_string(expected));
      }
    }
    result.buffer_stats.push_back(buffer.stats());
    timing.scoring_seconds = seconds_since(start);

    start = Clock::now();
    for (std::size_t j = 0; j <= i; ++j) result.matrix.set(i, j, task_accuracy(model, p.tasks[j], mask));
    result.visible_classes.push_back(mask.visible_count());
    timing.eval_seconds = seconds_since(start);
    result.task_timings.push_back(timing);
  }
  result.average_accuracy = average_accuracy(result.matrix);
  result.average_forgetting = average_forgetting(result.matrix);
  return result;
}

RunResult run_joint(const RunConfig& cfg, const data::DatasetBundle& dataset) {
  cfg.validate();
  const auto t0 = Clock::now();
  Prepared p = prepare(cfg, dataset, false);
  const std::size_t k = p.tasks.size();
  const Graph& g = dataset.graph;

  RunResult result;
  result.config = cfg;
  result.matrix = AccuracyMatrix(k);
  result.preprocess_seconds = seconds_since(t0);

  std::vector<NodeId> train;
  for (std::size_t v = 0; v < g.num_nodes(); ++v) {
    if (p.split.roles[v] == Role::train) train.push_back(static_cast<NodeId>(v));
  }
  const gnn::ClassMask mask = gnn::ClassMask::first(p.sequence.num_classes, p.sequence.num_classes);
  const gnn::PropagationMatrix propagation = gnn::propagation_for(g, cfg.model.backbone);
  gnn::GnnModel model = gnn::GnnModel::create(g.feature_dim(), p.sequence.num_classes, model_config(cfg));

  TaskTimings timing;
  auto start = Clock::now();
  gnn::AdamState adam = gnn::make_adam_state(model);
  const gnn::LabeledNodes batch{propagation, *g.features(), *g.labels(), train};
  for (std::size_t epoch = 0; epoch < cfg.model.epochs; ++epoch) {
    const auto lg = gnn::loss_and_grad(model, batch, mask);
    gnn::adam_step(model, lg.grads, adam, cfg.model.learning_rate);
  }
  timing.train_seconds = seconds_since(start);

  start = Clock::now();
  for (std::size_t j = 0; j < k; ++j) result.matrix.set(k - 1, j, task_accuracy(model, p.tasks[j], mask));
  result.visible_classes.push_back(mask.visible_count());
  timing.eval_seconds = seconds_since(start);
  result.task_timings.push_back(timing);
  result.buffer_stats.push_back(replay::BufferStats{});
  result.average_accuracy = average_accuracy(result.matrix);
  if (k == 1) result.average_forgetting = 0.0;
  return result;
}

RunResult run(const RunConfig& cfg, const data::DatasetBundle& dataset) {
  return cfg.method == Method::joint ? run_joint(cfg, dataset) : run_continual(cfg, dataset);
}

}  // namespace ftfer::harness
