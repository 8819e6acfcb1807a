#pragma once

// Node importance scores for experience selection: gradient-norm (GraNd)
// scores, Hodge potential scores, simple baselines, min-max fusion and the
// two per-class samplers.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "ftfer/gnn.hpp"
#include "ftfer/graph.hpp"
#include "ftfer/hodge.hpp"

namespace ftfer::scoring {

enum class ScoreKind { loss, topo, mixed, random, mean_of_feature, degree };

std::string_view to_string(ScoreKind kind);

// values[i] scores nodes[i] (ids of the task graph).
struct ScoreVector {
  std::vector<NodeId> nodes;
  std::vector<double> values;
  ScoreKind kind = ScoreKind::loss;
};

struct FusionConfig {
  double beta = 0.5;
  void validate() const;
};

// Per-node gradient norms at the current parameters.
ScoreVector grand_scores(const gnn::GnnModel& model, const gnn::LabeledNodes& train,
                         const gnn::ClassMask& mask);

// Restriction of a potential (computed on the task graph) to the given nodes.
ScoreVector topo_scores(const hodge::PotentialScores& potential, std::span<const NodeId> nodes);

// (s - min) / (max - min); all zeros when max == min.
ScoreVector minmax_normalize(const ScoreVector& s);

// (1 - beta) norm(loss) + beta norm(topo).
ScoreVector fuse_scores(const ScoreVector& loss, const ScoreVector& topo, const FusionConfig& cfg);

// Per class, the b highest scores (ties by ascending node id).
// `labels` is indexed by node id.
NodeSet select_deterministic(const ScoreVector& scores, std::span<const Label> labels, std::size_t b);

// Per class, b draws without replacement from p(i) = s_i / sum_class s, renormalized
// after each draw; uniform over the remaining nodes whenever their scores sum to 0.
// Each class draws from its own stream seeded by (seed, class id).
NodeSet select_probabilistic(const ScoreVector& scores, std::span<const Label> labels,
                             std::size_t b, std::uint64_t seed);

enum class BaselineKind { random, mean_of_feature, degree };

// random: seeded uniform [0, 1); mean_of_feature: -||x_i - mean of its class||
// over `nodes`; degree: degree in task_graph.
ScoreVector baseline_scores(BaselineKind kind, const Graph& task_graph,
                            std::span<const NodeId> nodes, std::uint64_t seed);

}  // namespace ftfer::scoring
