#include "ftfer/replay.hpp"

#include <algorithm>
#include <numeric>

#include "ftfer/error.hpp"

namespace ftfer::replay {

BufferStats ExperienceBuffer::stats() const {
  BufferStats s;
  s.nodes = global_ids_.size();
  s.edges = graph_.num_edges();
  s.bytes = global_ids_.size() * sizeof(NodeId) + task_ids_.size() * sizeof(int) +
            graph_.memory_bytes();
  return s;
}

ExperienceBuffer update_buffer(const ExperienceBuffer& buffer, const Graph& task_graph,
                               std::span<const NodeId> task_global_ids, const NodeSet& selected,
                               int task_id) {
  if (selected.empty()) return buffer;
  if (!task_graph.features() || !task_graph.labels()) {
    throw InvalidArgument("update_buffer: task graph must carry features and labels");
  }
  if (task_global_ids.size() != task_graph.num_nodes()) {
    throw InvalidArgument("update_buffer: id map size does not match the task graph");
  }
  if (!buffer.empty() && buffer.graph_.feature_dim() != task_graph.feature_dim()) {
    throw InvalidArgument("update_buffer: feature dimension differs from buffered data");
  }
  for (NodeId v : selected) {
    if (v >= task_graph.num_nodes()) throw InvalidArgument("update_buffer: selected node out of range");
    if (std::binary_search(buffer.global_ids_.begin(), buffer.global_ids_.end(), task_global_ids[v])) {
      throw InvalidArgument("update_buffer: node " + std::to_string(task_global_ids[v]) +
                            " is already buffered (tasks must be disjoint)");
    }
  }

  const Subgraph block = induced_subgraph(task_graph, selected);
  const std::size_t old_n = buffer.size();
  const std::size_t new_n = old_n + selected.size();
  const std::size_t dim = task_graph.feature_dim();

  // Candidate entries: old buffer first, then the new block; sorted by global id.
  struct Source {
    NodeId global;
    bool from_block;
    NodeId local;
  };
  std::vector<Source> sources;
  sources.reserve(new_n);
  for (std::size_t i = 0; i < old_n; ++i) sources.push_back({buffer.global_ids_[i], false, static_cast<NodeId>(i)});
  for (std::size_t i = 0; i < block.ids.new_to_old.size(); ++i) {
    sources.push_back({task_global_ids[block.ids.new_to_old[i]], true, static_cast<NodeId>(i)});
  }
  std::sort(sources.begin(), sources.end(),
            [](const Source& a, const Source& b) { return a.global < b.global; });

  std::vector<NodeId> old_to_merged(old_n);
  std::vector<NodeId> block_to_merged(block.graph.num_nodes());
  ExperienceBuffer out;
  out.global_ids_.resize(new_n);
  out.task_ids_.resize(new_n);
  Matrix features(new_n, dim);
  std::vector<Label> labels(new_n);
  for (std::size_t m = 0; m < new_n; ++m) {
    const Source& s = sources[m];
    out.global_ids_[m] = s.global;
    const Graph& src = s.from_block ? block.graph : buffer.graph_;
    (s.from_block ? block_to_merged : old_to_merged)[s.local] = static_cast<NodeId>(m);
    out.task_ids_[m] = s.from_block ? task_id : buffer.task_ids_[s.local];
    const auto row = src.features()->row(s.local);
    std::copy(row.begin(), row.end(), features.row(m).begin());
    labels[m] = (*src.labels())[s.local];
  }

  std::vector<Edge> edges;
  for (const Edge& e : buffer.graph_.edges()) edges.push_back({old_to_merged[e.u], old_to_merged[e.v]});
  for (const Edge& e : block.graph.edges()) edges.push_back({block_to_merged[e.u], block_to_merged[e.v]});
  out.graph_ = build_graph(edges, new_n, false);
  out.graph_.set_features(std::move(features));
  out.graph_.set_labels(std::move(labels));
  return out;
}

gnn::LossAndGrad combined_loss(const gnn::GnnModel& model, const gnn::LabeledNodes& task,
                               const ExperienceBuffer& buffer,
                               const gnn::PropagationMatrix& buffer_propagation, double lambda,
                               const gnn::ClassMask& mask) {
  if (!(lambda >= 0.0)) throw InvalidArgument("lambda must be >= 0");
  gnn::LossAndGrad total = gnn::loss_and_grad(model, task, mask);
  if (buffer.empty() || lambda == 0.0) return total;

  const Graph& g = buffer.graph();
  if (buffer_propagation.num_nodes() != g.num_nodes()) {
    throw InvalidArgument("combined_loss: buffer propagation matrix is stale");
  }
  std::vector<NodeId> all(g.num_nodes());
  std::iota(all.begin(), all.end(), NodeId{0});
  const gnn::LossAndGrad replayed = gnn::loss_and_grad(
      model, gnn::LabeledNodes{buffer_propagation, *g.features(), *g.labels(), all}, mask);
  total.loss += lambda * replayed.loss;
  gnn::add_scaled(total.grads, replayed.grads, lambda);
  return total;
}

}  // namespace ftfer::replay
