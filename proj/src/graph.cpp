#include "ftfer/graph.hpp"

#include <algorithm>
#include <deque>
#include <sstream>

#include "ftfer/error.hpp"

namespace ftfer {

NodeSet::NodeSet(std::vector<NodeId> ids) : ids_(std::move(ids)) {
  std::sort(ids_.begin(), ids_.end());
  ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
}

bool NodeSet::contains(NodeId id) const {
  return std::binary_search(ids_.begin(), ids_.end(), id);
}

bool Graph::has_edge(NodeId u, NodeId v) const {
  if (u >= num_nodes_ || v >= num_nodes_) return false;
  const auto row = neighbors(u);
  return std::binary_search(row.begin(), row.end(), v);
}

std::vector<Edge> Graph::edges() const {
  std::vector<Edge> out;
  out.reserve(num_edges());
  for (NodeId u = 0; u < num_nodes_; ++u) {
    for (NodeId v : neighbors(u)) {
      if (directed_ || u < v) out.push_back({u, v});
    }
  }
  return out;
}

void Graph::set_features(Matrix features) {
  if (features.rows() != num_nodes_) {
    throw InvalidArgument("feature matrix has " + std::to_string(features.rows()) +
                          " rows for a graph with " + std::to_string(num_nodes_) + " nodes");
  }
  features_ = std::move(features);
}

void Graph::set_labels(std::vector<Label> labels) {
  if (labels.size() != num_nodes_) {
    throw InvalidArgument("label vector has " + std::to_string(labels.size()) +
                          " entries for a graph with " + std::to_string(num_nodes_) + " nodes");
  }
  labels_ = std::move(labels);
}

std::size_t Graph::memory_bytes() const noexcept {
  std::size_t bytes = row_offsets_.size() * sizeof(std::size_t) + col_indices_.size() * sizeof(NodeId);
  if (features_) bytes += features_->size() * sizeof(double);
  if (labels_) bytes += labels_->size() * sizeof(Label);
  return bytes;
}

Graph build_graph(std::span<const Edge> edges, std::size_t num_nodes, bool directed) {
  std::vector<Edge> arcs;
  arcs.reserve(directed ? edges.size() : 2 * edges.size());
  for (const Edge& e : edges) {
    if (e.u >= num_nodes || e.v >= num_nodes) {
      std::ostringstream os;
      os << "node id out of range in edge (" << e.u << "," << e.v << ") for " << num_nodes
         << " nodes";
      throw InvalidArgument(os.str());
    }
    if (e.u == e.v) continue;
    arcs.push_back(e);
    if (!directed) arcs.push_back({e.v, e.u});
  }
  std::sort(arcs.begin(), arcs.end(),
            [](const Edge& a, const Edge& b) { return a.u != b.u ? a.u < b.u : a.v < b.v; });
  arcs.erase(std::unique(arcs.begin(), arcs.end()), arcs.end());

  Graph g;
  g.num_nodes_ = num_nodes;
  g.directed_ = directed;
  g.row_offsets_.assign(num_nodes + 1, 0);
  g.col_indices_.reserve(arcs.size());
  for (const Edge& e : arcs) {
    ++g.row_offsets_[e.u + 1];
    g.col_indices_.push_back(e.v);
  }
  for (std::size_t i = 0; i < num_nodes; ++i) g.row_offsets_[i + 1] += g.row_offsets_[i];
  return g;
}

Graph undirected_support(const Graph& g) {
  if (!g.directed()) return g;
  const auto edges = g.edges();
  Graph out = build_graph(edges, g.num_nodes(), false);
  if (g.features()) out.set_features(*g.features());
  if (g.labels()) out.set_labels(*g.labels());
  return out;
}

std::vector<double> degree_vector(const Graph& g) {
  if (g.directed()) return degree_vector(undirected_support(g));
  std::vector<double> deg(g.num_nodes());
  for (NodeId v = 0; v < g.num_nodes(); ++v) deg[v] = static_cast<double>(g.out_degree(v));
  return deg;
}

std::vector<double> laplacian_matvec(const Graph& g, std::span<const double> x) {
  if (x.size() != g.num_nodes()) {
    throw InvalidArgument("laplacian_matvec: vector length " + std::to_string(x.size()) +
                          " does not match " + std::to_string(g.num_nodes()) + " nodes");
  }
  if (g.directed()) throw InvalidArgument("laplacian_matvec requires an undirected graph");
  std::vector<double> y(g.num_nodes());
  for (NodeId i = 0; i < g.num_nodes(); ++i) {
    double acc = 0.0;
    for (NodeId j : g.neighbors(i)) acc += x[i] - x[j];
    y[i] = acc;
  }
  return y;
}

std::vector<SignedEdge> antisymmetric_adjacency(const Graph& g) {
  std::vector<SignedEdge> out;
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    for (NodeId v : g.neighbors(u)) {
      if (!g.directed()) {
        out.push_back({u, v, +1});
      } else if (!g.has_edge(v, u)) {
        out.push_back({u, v, +1});
        out.push_back({v, u, -1});
      }
    }
  }
  if (g.directed()) {
    std::sort(out.begin(), out.end(), [](const SignedEdge& a, const SignedEdge& b) {
      return a.from != b.from ? a.from < b.from : a.to < b.to;
    });
  }
  return out;
}

std::vector<double> divergence(std::span<const SignedEdge> signed_adjacency, std::size_t n) {
  std::vector<double> div(n, 0.0);
  for (const SignedEdge& e : signed_adjacency) {
    if (e.from >= n || e.to >= n) {
      throw InvalidArgument("divergence: signed edge references node outside [0, n)");
    }
    div[e.from] += e.sign;
  }
  return div;
}

ComponentLabeling connected_components(const Graph& g) {
  if (g.directed()) return connected_components(undirected_support(g));
  constexpr auto kUnseen = std::numeric_limits<std::uint32_t>::max();
  ComponentLabeling labeling;
  labeling.component.assign(g.num_nodes(), kUnseen);
  std::deque<NodeId> queue;
  for (NodeId start = 0; start < g.num_nodes(); ++start) {
    if (labeling.component[start] != kUnseen) continue;
    const std::uint32_t id = labeling.count++;
    labeling.component[start] = id;
    queue.push_back(start);
    while (!queue.empty()) {
      const NodeId u = queue.front();
      queue.pop_front();
      for (NodeId v : g.neighbors(u)) {
        if (labeling.component[v] == kUnseen) {
          labeling.component[v] = id;
          queue.push_back(v);
        }
      }
    }
  }
  return labeling;
}

Subgraph induced_subgraph(const Graph& g, const NodeSet& nodes) {
  Subgraph sub;
  sub.ids.old_to_new.assign(g.num_nodes(), kNoNode);
  sub.ids.new_to_old.assign(nodes.begin(), nodes.end());
  for (std::size_t i = 0; i < sub.ids.new_to_old.size(); ++i) {
    const NodeId old_id = sub.ids.new_to_old[i];
    if (old_id >= g.num_nodes()) {
      throw InvalidArgument("induced_subgraph: node id " + std::to_string(old_id) +
                            " out of range for " + std::to_string(g.num_nodes()) + " nodes");
    }
    sub.ids.old_to_new[old_id] = static_cast<NodeId>(i);
  }

  std::vector<Edge> arcs;
  for (std::size_t i = 0; i < sub.ids.new_to_old.size(); ++i) {
    for (NodeId old_v : g.neighbors(sub.ids.new_to_old[i])) {
      const NodeId v = sub.ids.old_to_new[old_v];
      if (v != kNoNode) arcs.push_back({static_cast<NodeId>(i), v});
    }
  }
  sub.graph = build_graph(arcs, nodes.size(), g.directed());

  if (g.features()) {
    const Matrix& src = *g.features();
    Matrix feats(nodes.size(), src.cols());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const auto from = src.row(sub.ids.new_to_old[i]);
      std::copy(from.begin(), from.end(), feats.row(i).begin());
    }
    sub.graph.set_features(std::move(feats));
  }
  if (g.labels()) {
    std::vector<Label> labels(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) labels[i] = (*g.labels())[sub.ids.new_to_old[i]];
    sub.graph.set_labels(std::move(labels));
  }
  return sub;
}

Subgraph largest_connected_component(const Graph& g) {
  if (g.num_nodes() == 0) throw InvalidArgument("largest_connected_component: empty graph");
  const ComponentLabeling labeling = connected_components(g);
  std::vector<std::size_t> sizes(labeling.count, 0);
  for (auto c : labeling.component) ++sizes[c];
  // components are numbered by their smallest member, so the first maximum wins ties
  const auto best = static_cast<std::uint32_t>(
      std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
  std::vector<NodeId> keep;
  keep.reserve(sizes[best]);
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    if (labeling.component[v] == best) keep.push_back(v);
  }
  return induced_subgraph(g, NodeSet(std::move(keep)));
}

}  // namespace ftfer
