#include "ftfer/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "ftfer/error.hpp"

namespace ftfer::scoring {

namespace {

// Node positions of each class present in the score vector, classes ascending.
std::map<Label, std::vector<std::size_t>> group_by_class(const ScoreVector& scores,
                                                         std::span<const Label> labels) {
  std::map<Label, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < scores.nodes.size(); ++i) {
    const NodeId v = scores.nodes[i];
    if (v >= labels.size()) throw InvalidArgument("scored node " + std::to_string(v) + " has no label");
    groups[labels[v]].push_back(i);
  }
  return groups;
}

void check_scores(const ScoreVector& s) {
  if (s.nodes.size() != s.values.size()) throw InvalidArgument("score vector: node/value count mismatch");
  for (double v : s.values) {
    if (!std::isfinite(v)) throw InvalidArgument("score vector contains a non-finite value");
  }
}

}  // namespace

std::string_view to_string(ScoreKind kind) {
  switch (kind) {
    case ScoreKind::loss: return "loss";
    case ScoreKind::topo: return "topo";
    case ScoreKind::mixed: return "mixed";
    case ScoreKind::random: return "random";
    case ScoreKind::mean_of_feature: return "mean_of_feature";
    case ScoreKind::degree: return "degree";
  }
  return "unknown";
}

void FusionConfig::validate() const {
  if (!(beta >= 0.0 && beta <= 1.0)) throw InvalidArgument("beta must lie in [0, 1]");
}

ScoreVector grand_scores(const gnn::GnnModel& model, const gnn::LabeledNodes& train,
                         const gnn::ClassMask& mask) {
  ScoreVector s;
  s.kind = ScoreKind::loss;
  s.nodes.assign(train.nodes.begin(), train.nodes.end());
  s.values = gnn::per_node_grad_norms(model, train, mask);
  return s;
}

ScoreVector topo_scores(const hodge::PotentialScores& potential, std::span<const NodeId> nodes) {
  ScoreVector s;
  s.kind = ScoreKind::topo;
  s.nodes.assign(nodes.begin(), nodes.end());
  s.values.reserve(nodes.size());
  for (NodeId v : nodes) {
    if (v >= potential.values.size()) {
      throw InvalidArgument("node " + std::to_string(v) + " outside the potential's domain");
    }
    s.values.push_back(potential.values[v]);
  }
  return s;
}

ScoreVector minmax_normalize(const ScoreVector& s) {
  check_scores(s);
  ScoreVector out = s;
  if (s.values.empty()) return out;
  const auto [lo, hi] = std::minmax_element(s.values.begin(), s.values.end());
  const double min = *lo;
  const double range = *hi - *lo;
  for (double& v : out.values) v = range > 0.0 ? (v - min) / range : 0.0;
  return out;
}

ScoreVector fuse_scores(const ScoreVector& loss, const ScoreVector& topo, const FusionConfig& cfg) {
  cfg.validate();
  if (loss.values.size() != topo.values.size() || loss.nodes != topo.nodes) {
    throw InvalidArgument("fuse_scores: score vectors cover different nodes");
  }
  const ScoreVector a = minmax_normalize(loss);
  const ScoreVector b = minmax_normalize(topo);
  ScoreVector out;
  out.kind = ScoreKind::mixed;
  out.nodes = loss.nodes;
  out.values.resize(a.values.size());
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    out.values[i] = (1.0 - cfg.beta) * a.values[i] + cfg.beta * b.values[i];
  }
  return out;
}

NodeSet select_deterministic(const ScoreVector& scores, std::span<const Label> labels, std::size_t b) {
  check_scores(scores);
  if (b < 1) throw InvalidArgument("per-class budget must be >= 1");
  std::vector<NodeId> chosen;
  for (auto& [label, members] : group_by_class(scores, labels)) {
    std::sort(members.begin(), members.end(), [&](std::size_t x, std::size_t y) {
      if (scores.values[x] != scores.values[y]) return scores.values[x] > scores.values[y];
      return scores.nodes[x] < scores.nodes[y];
    });
    const std::size_t take = std::min(b, members.size());
    for (std::size_t i = 0; i < take; ++i) chosen.push_back(scores.nodes[members[i]]);
  }
  return NodeSet(std::move(chosen));
}

NodeSet select_probabilistic(const ScoreVector& scores, std::span<const Label> labels,
                             std::size_t b, std::uint64_t seed) {
  check_scores(scores);
  if (b < 1) throw InvalidArgument("per-class budget must be >= 1");
  for (double v : scores.values) {
    if (v < 0.0) throw InvalidArgument("probabilistic sampling needs nonnegative scores");
  }
  std::vector<NodeId> chosen;
  for (const auto& [label, members] : group_by_class(scores, labels)) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(label), 0x5a3c9e1du};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<std::size_t> pool = members;  // ascending node position
    const std::size_t take = std::min(b, pool.size());
    for (std::size_t round = 0; round < take; ++round) {
      double total = 0.0;
      for (std::size_t i : pool) total += scores.values[i];
      std::size_t pick = pool.size() - 1;
      if (total > 0.0) {
        const double target = unit(rng) * total;
        double acc = 0.0;
        for (std::size_t k = 0; k < pool.size(); ++k) {
          acc += scores.values[pool[k]];
          if (target < acc && scores.values[pool[k]] > 0.0) {
            pick = k;
            break;
          }
        }
        // rounding can leave target == total; fall back to the last positive entry
        if (pick == pool.size() - 1 && scores.values[pool[pick]] <= 0.0) {
          for (std::size_t k = pool.size(); k-- > 0;) {
            if (scores.values[pool[k]] > 0.0) {
              pick = k;
              break;
            }
          }
        }
      } else {
        pick = std::min(static_cast<std::size_t>(unit(rng) * static_cast<double>(pool.size())),
                        pool.size() - 1);
      }
      chosen.push_back(scores.nodes[pool[pick]]);
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
    }
  }
  return NodeSet(std::move(chosen));
}

ScoreVector baseline_scores(BaselineKind kind, const Graph& task_graph,
                            std::span<const NodeId> nodes, std::uint64_t seed) {
  for (NodeId v : nodes) {
    if (v >= task_graph.num_nodes()) throw InvalidArgument("baseline_scores: node out of range");
  }
  ScoreVector s;
  s.nodes.assign(nodes.begin(), nodes.end());
  s.values.resize(nodes.size());
  switch (kind) {
    case BaselineKind::random: {
      s.kind = ScoreKind::random;
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      for (double& v : s.values) v = unit(rng);
      break;
    }
    case BaselineKind::degree: {
      s.kind = ScoreKind::degree;
      const auto deg = degree_vector(task_graph);
      for (std::size_t i = 0; i < nodes.size(); ++i) s.values[i] = deg[nodes[i]];
      break;
    }
    case BaselineKind::mean_of_feature: {
      s.kind = ScoreKind::mean_of_feature;
      if (!task_graph.features()) throw InvalidArgument("mean-of-feature scores need node features");
      if (!task_graph.labels()) throw InvalidArgument("mean-of-feature scores need node labels");
      const Matrix& x = *task_graph.features();
      const auto& y = *task_graph.labels();
      std::map<Label, std::pair<std::vector<double>, std::size_t>> sums;
      for (NodeId v : nodes) {
        auto& [sum, count] = sums[y[v]];
        sum.resize(x.cols(), 0.0);
        const auto row = x.row(v);
        for (std::size_t c = 0; c < x.cols(); ++c) sum[c] += row[c];
        ++count;
      }
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto& [sum, count] = sums[y[nodes[i]]];
        const auto row = x.row(nodes[i]);
        double d2 = 0.0;
        for (std::size_t c = 0; c < x.cols(); ++c) {
          const double diff = row[c] - sum[c] / static_cast<double>(count);
          d2 += diff * diff;
        }
        s.values[i] = -std::sqrt(d2);
      }
      break;
    }
  }
  return s;
}

}  // namespace ftfer::scoring
