#pragma once

// Experience buffer of sampled nodes and their induced subgraphs, and the
// replay-augmented training loss
//     L = mean CE(task train nodes on the task graph)
//       + lambda * mean CE(buffered nodes on the buffer graph).

#include <cstddef>
#include <span>
#include <vector>

#include "ftfer/gnn.hpp"
#include "ftfer/graph.hpp"

namespace ftfer::replay {

struct BufferStats {
  std::size_t nodes = 0;
  std::size_t edges = 0;
  std::size_t bytes = 0;
};

class ExperienceBuffer {
 public:
  ExperienceBuffer() = default;

  std::size_t size() const noexcept { return global_ids_.size(); }
  bool empty() const noexcept { return global_ids_.empty(); }

  // Ascending global ids; local id i of graph() is global_ids()[i].
  std::span<const NodeId> global_ids() const noexcept { return global_ids_; }
  std::span<const int> task_ids() const noexcept { return task_ids_; }
  // Buffer graph on local ids with features and labels attached (by value).
  const Graph& graph() const noexcept { return graph_; }

  BufferStats stats() const;

  friend ExperienceBuffer update_buffer(const ExperienceBuffer& buffer, const Graph& task_graph,
                                        std::span<const NodeId> task_global_ids,
                                        const NodeSet& selected, int task_id);

 private:
  std::vector<NodeId> global_ids_;
  std::vector<int> task_ids_;
  Graph graph_;
};

// Adds `selected` (ids of task_graph) and the subgraph they induce in
// task_graph as a disjoint block. task_global_ids maps task ids to dataset
// ids. Throws InvalidArgument if any selected node is already buffered.
ExperienceBuffer update_buffer(const ExperienceBuffer& buffer, const Graph& task_graph,
                               std::span<const NodeId> task_global_ids, const NodeSet& selected,
                               int task_id);

// Task loss plus lambda times the buffer loss, with summed gradients. The
// buffer term is skipped when the buffer is empty or lambda == 0.
gnn::LossAndGrad combined_loss(const gnn::GnnModel& model, const gnn::LabeledNodes& task,
                               const ExperienceBuffer& buffer,
                               const gnn::PropagationMatrix& buffer_propagation, double lambda,
                               const gnn::ClassMask& mask);

}  // namespace ftfer::replay
