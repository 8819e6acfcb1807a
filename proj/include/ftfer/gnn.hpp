#pragma once

// Two-layer GNN backbones with hand-written reverse mode.
//
//   GCN: logits = P relu(P X W1 + b1) W2 + b2,  P = D~^-1/2 (A + I) D~^-1/2
//   GIN: h = relu(mlp1(S X)), logits = mlp2(S h),  S = A + I,
//        mlp(x) = relu(x Wa + a) Wb + b
//
// The output layer covers every class of the benchmark; a ClassMask limits
// softmax and argmax to the classes seen so far.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "ftfer/graph.hpp"
#include "ftfer/matrix.hpp"

namespace ftfer::gnn {

enum class Backbone { gcn, gin };

std::string_view to_string(Backbone b);
Backbone parse_backbone(std::string_view name);

struct ModelConfig {
  std::size_t hidden_dim = 256;
  double learning_rate = 0.005;
  std::size_t epochs = 200;
  Backbone backbone = Backbone::gcn;
  std::uint64_t seed = 0;

  void validate() const;
};

// Symmetric sparse propagation operator in CSR form (self-loops included).
class PropagationMatrix {
 public:
  PropagationMatrix() = default;

  std::size_t num_nodes() const noexcept { return row_offsets_.empty() ? 0 : row_offsets_.size() - 1; }
  std::span<const std::size_t> row_offsets() const noexcept { return row_offsets_; }
  std::span<const NodeId> col_indices() const noexcept { return col_indices_; }
  std::span<const double> values() const noexcept { return values_; }

  // out = P x
  void apply(const Matrix& x, Matrix& out) const;
  // Dense copy, for tests and small oracles.
  Matrix to_dense() const;

  // Takes ownership of CSR arrays; throws InvalidArgument on inconsistent sizes.
  static PropagationMatrix from_parts(std::vector<std::size_t> row_offsets,
                                      std::vector<NodeId> col_indices, std::vector<double> values);

 private:
  std::vector<std::size_t> row_offsets_;
  std::vector<NodeId> col_indices_;
  std::vector<double> values_;
};

// D~^-1/2 (A + I) D~^-1/2 for undirected g; the self-loops exist only here.
PropagationMatrix normalize_adjacency(const Graph& g);
// A + I, the GIN sum aggregation with epsilon = 0.
PropagationMatrix sum_aggregation(const Graph& g);
PropagationMatrix propagation_for(const Graph& g, Backbone backbone);

class ClassMask {
 public:
  explicit ClassMask(std::size_t total_classes = 0);
  // Classes [0, visible) visible out of total.
  static ClassMask first(std::size_t visible, std::size_t total_classes);

  void show(Label c);
  bool visible(Label c) const {
    return c >= 0 && static_cast<std::size_t>(c) < visible_.size() && visible_[c];
  }
  std::size_t visible_count() const noexcept;
  std::size_t total() const noexcept { return visible_.size(); }

 private:
  std::vector<bool> visible_;
};

class GnnModel {
 public:
  // Glorot-uniform weights, zero biases, drawn from cfg.seed.
  static GnnModel create(std::size_t input_dim, std::size_t num_classes, const ModelConfig& cfg);

  Backbone backbone() const noexcept { return backbone_; }
  std::size_t input_dim() const noexcept { return input_dim_; }
  std::size_t hidden_dim() const noexcept { return hidden_dim_; }
  std::size_t num_classes() const noexcept { return num_classes_; }

  // GCN: W1, b1, W2, b2.  GIN: Wa1, a1, Wb1, b1, Wa2, a2, Wb2, b2.
  std::vector<Matrix>& parameters() noexcept { return params_; }
  const std::vector<Matrix>& parameters() const noexcept { return params_; }
  std::size_t parameter_count() const;

 private:
  Backbone backbone_ = Backbone::gcn;
  std::size_t input_dim_ = 0;
  std::size_t hidden_dim_ = 0;
  std::size_t num_classes_ = 0;
  std::vector<Matrix> params_;
};

// Same shapes as GnnModel::parameters().
using Gradients = std::vector<Matrix>;

Gradients zeros_like(const GnnModel& model);
double squared_norm(const Gradients& grads);
// a += scale * b
void add_scaled(Gradients& a, const Gradients& b, double scale);

// Nodes of one graph that contribute to a loss or an accuracy.
struct LabeledNodes {
  const PropagationMatrix& propagation;
  const Matrix& features;
  std::span<const Label> labels;  // indexed by node id
  std::span<const NodeId> nodes;
};

Matrix forward(const GnnModel& model, const PropagationMatrix& propagation, const Matrix& features);

struct LossAndGrad {
  double loss = 0.0;
  Gradients grads;
};

// Mean cross-entropy over batch.nodes with softmax restricted to visible
// classes, and its exact gradient. Throws InvalidArgument if a node's label
// is not visible.
LossAndGrad loss_and_grad(const GnnModel& model, const LabeledNodes& batch, const ClassMask& mask);
double loss_value(const GnnModel& model, const LabeledNodes& batch, const ClassMask& mask);

// ||grad_theta l(f(x_i), y_i)||_2 for every node of the batch (one forward pass).
std::vector<double> per_node_grad_norms(const GnnModel& model, const LabeledNodes& batch,
                                        const ClassMask& mask);
double per_node_grad_norm(const GnnModel& model, const PropagationMatrix& propagation,
                          const Matrix& features, NodeId node, Label label, const ClassMask& mask);

// Fraction of nodes whose argmax over visible logits equals the label; ties go
// to the lowest class id. Throws InvalidArgument on an empty node list.
double evaluate_accuracy(const GnnModel& model, const LabeledNodes& batch, const ClassMask& mask);

// Index of the largest visible logit in a row, lowest id on ties.
Label masked_argmax(std::span<const double> logits, const ClassMask& mask);

struct AdamState {
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
  std::size_t step = 0;
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;

AdamState make_adam_state(const GnnModel& model);

// One bias-corrected Adam update; increments state.step before use.
void adam_step(GnnModel& model, const Gradients& grads, AdamState& state, double learning_rate);

}  // namespace ftfer::gnn
