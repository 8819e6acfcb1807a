#pragma once

// Immutable CSR graph plus the structural operators used by the Hodge and
// GNN modules: degree, Laplacian action, antisymmetric adjacency, divergence,
// connected components and induced subgraphs.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "ftfer/matrix.hpp"

namespace ftfer {

using NodeId = std::uint32_t;
using Label = std::int32_t;

inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();

struct Edge {
  NodeId u;
  NodeId v;
  bool operator==(const Edge&) const = default;
};

// Sorted, duplicate-free node ids.
class NodeSet {
 public:
  NodeSet() = default;
  // Sorts and removes duplicates.
  explicit NodeSet(std::vector<NodeId> ids);

  std::span<const NodeId> ids() const noexcept { return ids_; }
  std::size_t size() const noexcept { return ids_.size(); }
  bool empty() const noexcept { return ids_.empty(); }
  bool contains(NodeId id) const;
  auto begin() const noexcept { return ids_.begin(); }
  auto end() const noexcept { return ids_.end(); }

  bool operator==(const NodeSet&) const = default;

 private:
  std::vector<NodeId> ids_;
};

class Graph {
 public:
  Graph() = default;

  std::size_t num_nodes() const noexcept { return num_nodes_; }
  // Number of CSR entries; an undirected edge contributes two.
  std::size_t num_entries() const noexcept { return col_indices_.size(); }
  // Undirected edges for undirected graphs, arcs for directed ones.
  std::size_t num_edges() const noexcept {
    return directed_ ? col_indices_.size() : col_indices_.size() / 2;
  }
  bool directed() const noexcept { return directed_; }

  std::span<const std::size_t> row_offsets() const noexcept { return row_offsets_; }
  std::span<const NodeId> col_indices() const noexcept { return col_indices_; }
  std::span<const NodeId> neighbors(NodeId v) const {
    return {col_indices_.data() + row_offsets_[v], row_offsets_[v + 1] - row_offsets_[v]};
  }
  std::size_t out_degree(NodeId v) const { return row_offsets_[v + 1] - row_offsets_[v]; }
  bool has_edge(NodeId u, NodeId v) const;

  // Edges with u < v for undirected graphs, every arc for directed graphs.
  std::vector<Edge> edges() const;

  const std::optional<Matrix>& features() const noexcept { return features_; }
  const std::optional<std::vector<Label>>& labels() const noexcept { return labels_; }
  std::size_t feature_dim() const noexcept { return features_ ? features_->cols() : 0; }

  // Attach per-node data; row / entry count must equal num_nodes().
  void set_features(Matrix features);
  void set_labels(std::vector<Label> labels);

  // Heap bytes held by the CSR arrays, features and labels.
  std::size_t memory_bytes() const noexcept;

  friend Graph build_graph(std::span<const Edge> edges, std::size_t num_nodes, bool directed);

 private:
  std::size_t num_nodes_ = 0;
  bool directed_ = false;
  std::vector<std::size_t> row_offsets_{0};
  std::vector<NodeId> col_indices_;
  std::optional<Matrix> features_;
  std::optional<std::vector<Label>> labels_;
};

// Drops self-loops and duplicates; symmetrizes when !directed. Throws
// InvalidArgument naming the first pair with an id >= num_nodes.
Graph build_graph(std::span<const Edge> edges, std::size_t num_nodes, bool directed);

// Undirected graph on the same nodes with edge {u,v} iff u->v or v->u.
// Features and labels are carried over.
Graph undirected_support(const Graph& g);

// Degree in the undirected support.
std::vector<double> degree_vector(const Graph& g);

// (D - A) x for undirected g, computed from the CSR arrays.
std::vector<double> laplacian_matvec(const Graph& g, std::span<const double> x);

struct SignedEdge {
  NodeId from;
  NodeId to;
  int sign;
  bool operator==(const SignedEdge&) const = default;
};

// Row-major nonzeros of the antisymmetric adjacency: +1 on one-way arcs,
// -1 on their reversal, reciprocal pairs omitted. For undirected graphs this
// is A itself (both orientations with +1).
std::vector<SignedEdge> antisymmetric_adjacency(const Graph& g);

// Row sums of a signed adjacency: entry i = sum_j sign(i,j).
std::vector<double> divergence(std::span<const SignedEdge> signed_adjacency, std::size_t n);

struct ComponentLabeling {
  std::vector<std::uint32_t> component;  // per node, in [0, count)
  std::uint32_t count = 0;
};

// Components of the undirected support, numbered in order of their smallest node id.
ComponentLabeling connected_components(const Graph& g);

// Maps between the node ids of a graph and one of its induced subgraphs.
struct IdMap {
  std::vector<NodeId> new_to_old;  // ascending
  std::vector<NodeId> old_to_new;  // kNoNode when dropped

  std::optional<NodeId> to_new(NodeId old_id) const {
    const NodeId id = old_id < old_to_new.size() ? old_to_new[old_id] : kNoNode;
    return id == kNoNode ? std::nullopt : std::optional<NodeId>(id);
  }
};

struct Subgraph {
  Graph graph;
  IdMap ids;
};

// Edges of g with both endpoints in nodes, relabelled in ascending old-id order.
Subgraph induced_subgraph(const Graph& g, const NodeSet& nodes);

// Induced subgraph on the largest component; ties go to the component
// containing the smallest node id. Throws InvalidArgument on an empty graph.
Subgraph largest_connected_component(const Graph& g);

}  // namespace ftfer
