#include "ftfer/gnn.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "ftfer/error.hpp"
#include "ftfer/simd.hpp"

namespace ftfer::gnn {

namespace {

// Activations kept for the backward pass. GCN fills s1, a1, u1 (= relu(a1)),
// s2 and logits with s1 = P X, a1 = s1 W1 + b1, s2 = P u1. GIN fills all.
struct Tape {
  Matrix s1, a1, u1, z1, h1, s2, a2, u2, logits;
};

struct Workspace {
  Matrix d_hidden_out;  // n x hidden
  Matrix d_hidden_in;   // n x hidden
  Matrix d_hidden_tmp;  // n x hidden (GIN only)
  std::vector<char> mark;
  std::vector<std::size_t> rows;
};

void linear(const Matrix& x, const Matrix& w, const Matrix& b, Matrix& out) {
  multiply(x, w, out);
  add_row_broadcast(out, b);
}

void relu(const Matrix& in, Matrix& out) {
  if (out.rows() != in.rows() || out.cols() != in.cols()) out = Matrix(in.rows(), in.cols());
  simd::kernels().relu(in.values().data(), out.values().data(), in.size());
}

void check_inputs(const GnnModel& model, const PropagationMatrix& p, const Matrix& features) {
  if (features.cols() != model.input_dim()) {
    throw InvalidArgument("feature dimension " + std::to_string(features.cols()) +
                          " does not match model input dimension " +
                          std::to_string(model.input_dim()));
  }
  if (features.rows() != p.num_nodes()) {
    throw InvalidArgument("feature rows " + std::to_string(features.rows()) +
                          " do not match propagation size " + std::to_string(p.num_nodes()));
  }
}

Tape run_forward(const GnnModel& model, const PropagationMatrix& p, const Matrix& features) {
  check_inputs(model, p, features);
  const auto& w = model.parameters();
  Tape t;
  p.apply(features, t.s1);
  if (model.backbone() == Backbone::gcn) {
    linear(t.s1, w[0], w[1], t.a1);
    relu(t.a1, t.u1);
    p.apply(t.u1, t.s2);
    linear(t.s2, w[2], w[3], t.logits);
  } else {
    linear(t.s1, w[0], w[1], t.a1);
    relu(t.a1, t.u1);
    linear(t.u1, w[2], w[3], t.z1);
    relu(t.z1, t.h1);
    p.apply(t.h1, t.s2);
    linear(t.s2, w[4], w[5], t.a2);
    relu(t.a2, t.u2);
    linear(t.u2, w[6], w[7], t.logits);
  }
  return t;
}

void zero_rows(Matrix& m, std::span<const std::size_t> rows) {
  for (std::size_t r : rows) std::fill(m.row(r).begin(), m.row(r).end(), 0.0);
}

void ensure_shape(Matrix& m, std::size_t rows, std::size_t cols) {
  if (m.rows() != rows || m.cols() != cols) m = Matrix(rows, cols);
}

// out rows touched = P-neighbourhood of `rows`; out[i] = sum_r P(i, r) in[r].
// Relies on P being symmetric. The touched rows are left in ws.rows.
void propagate_back(const PropagationMatrix& p, const Matrix& in, std::span<const std::size_t> rows,
                    Matrix& out, Workspace& ws) {
  ws.mark.assign(p.num_nodes(), 0);
  ws.rows.clear();
  const auto offsets = p.row_offsets();
  const auto cols = p.col_indices();
  const auto vals = p.values();
  for (std::size_t r : rows) {
    for (std::size_t k = offsets[r]; k < offsets[r + 1]; ++k) {
      if (!ws.mark[cols[k]]) {
        ws.mark[cols[k]] = 1;
        ws.rows.push_back(cols[k]);
      }
    }
  }
  std::sort(ws.rows.begin(), ws.rows.end());
  zero_rows(out, ws.rows);
  const auto& k = simd::kernels();
  for (std::size_t r : rows) {
    const double* src = in.row(r).data();
    for (std::size_t e = offsets[r]; e < offsets[r + 1]; ++e) {
      k.axpy(vals[e], src, out.row(cols[e]).data(), in.cols());
    }
  }
}

void relu_backward_rows(const Matrix& pre, Matrix& grad, std::span<const std::size_t> rows) {
  const auto& k = simd::kernels();
  for (std::size_t r : rows) {
    k.relu_backward(pre.row(r).data(), grad.row(r).data(), grad.row(r).data(), grad.cols());
  }
}

// Accumulates dLoss/dtheta into grads given dLoss/dlogits, nonzero only on `rows`.
void backward(const GnnModel& model, const PropagationMatrix& p, const Tape& t,
              const Matrix& d_logits, std::span<const std::size_t> rows, Gradients& grads,
              Workspace& ws) {
  const auto& w = model.parameters();
  const std::size_t n = p.num_nodes();
  const std::size_t h = model.hidden_dim();
  ensure_shape(ws.d_hidden_out, n, h);
  ensure_shape(ws.d_hidden_in, n, h);

  if (model.backbone() == Backbone::gcn) {
    accumulate_at_b(t.s2, d_logits, rows, grads[2]);
    accumulate_column_sums(d_logits, rows, grads[3]);
    multiply_bt_rows(d_logits, w[2], rows, ws.d_hidden_out);  // d s2
    propagate_back(p, ws.d_hidden_out, rows, ws.d_hidden_in, ws);  // d u1
    relu_backward_rows(t.a1, ws.d_hidden_in, ws.rows);            // d a1
    accumulate_at_b(t.s1, ws.d_hidden_in, ws.rows, grads[0]);
    accumulate_column_sums(ws.d_hidden_in, ws.rows, grads[1]);
    return;
  }

  ensure_shape(ws.d_hidden_tmp, n, h);
  Matrix& d_u2 = ws.d_hidden_out;
  accumulate_at_b(t.u2, d_logits, rows, grads[6]);
  accumulate_column_sums(d_logits, rows, grads[7]);
  multiply_bt_rows(d_logits, w[6], rows, d_u2);
  relu_backward_rows(t.a2, d_u2, rows);  // d a2
  accumulate_at_b(t.s2, d_u2, rows, grads[4]);
  accumulate_column_sums(d_u2, rows, grads[5]);
  Matrix& d_s2 = ws.d_hidden_tmp;
  multiply_bt_rows(d_u2, w[4], rows, d_s2);
  Matrix& d_h1 = ws.d_hidden_in;
  propagate_back(p, d_s2, rows, d_h1, ws);
  const std::vector<std::size_t> inner(ws.rows);
  relu_backward_rows(t.z1, d_h1, inner);  // d z1
  accumulate_at_b(t.u1, d_h1, inner, grads[2]);
  accumulate_column_sums(d_h1, inner, grads[3]);
  Matrix& d_u1 = ws.d_hidden_out;
  multiply_bt_rows(d_h1, w[2], inner, d_u1);
  relu_backward_rows(t.a1, d_u1, inner);  // d a1
  accumulate_at_b(t.s1, d_u1, inner, grads[0]);
  accumulate_column_sums(d_u1, inner, grads[1]);
}

// Cross-entropy of one row over visible classes; writes (softmax - onehot) * scale
// into grad_row (invisible entries zero) and returns the loss.
double masked_cross_entropy(std::span<const double> logits, Label label, const ClassMask& mask,
                            double scale, std::span<double> grad_row) {
  if (!mask.visible(label)) {
    throw InvalidArgument("label " + std::to_string(label) + " is not visible under the class mask");
  }
  double max_logit = -INFINITY;
  for (std::size_t c = 0; c < logits.size(); ++c) {
    if (mask.visible(static_cast<Label>(c))) max_logit = std::max(max_logit, logits[c]);
  }
  double sum = 0.0;
  for (std::size_t c = 0; c < logits.size(); ++c) {
    if (mask.visible(static_cast<Label>(c))) sum += std::exp(logits[c] - max_logit);
  }
  const double log_z = max_logit + std::log(sum);
  for (std::size_t c = 0; c < logits.size(); ++c) {
    if (!mask.visible(static_cast<Label>(c))) continue;
    const double prob = std::exp(logits[c] - log_z);
    grad_row[c] += scale * (prob - (static_cast<Label>(c) == label ? 1.0 : 0.0));
  }
  return log_z - logits[static_cast<std::size_t>(label)];
}

void check_batch(const GnnModel& model, const LabeledNodes& batch, const ClassMask& mask) {
  if (batch.nodes.empty()) throw InvalidArgument("empty node list");
  if (mask.total() != model.num_classes()) {
    throw InvalidArgument("class mask size does not match the model output dimension");
  }
  if (mask.visible_count() == 0) throw InvalidArgument("class mask has no visible class");
  if (batch.labels.size() != batch.features.rows()) {
    throw InvalidArgument("label count does not match feature rows");
  }
  for (NodeId v : batch.nodes) {
    if (v >= batch.features.rows()) throw InvalidArgument("node id " + std::to_string(v) + " out of range");
  }
}

std::vector<std::size_t> unique_rows(std::span<const NodeId> nodes) {
  std::vector<std::size_t> rows(nodes.begin(), nodes.end());
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  return rows;
}

}  // namespace

std::string_view to_string(Backbone b) { return b == Backbone::gcn ? "gcn" : "gin"; }

Backbone parse_backbone(std::string_view name) {
  if (name == "gcn") return Backbone::gcn;
  if (name == "gin") return Backbone::gin;
  throw InvalidArgument("unknown backbone '" + std::string(name) + "' (expected gcn or gin)");
}

void ModelConfig::validate() const {
  if (hidden_dim < 1) throw InvalidArgument("hidden_dim must be >= 1");
  if (!(learning_rate > 0.0)) throw InvalidArgument("learning_rate must be > 0");
}

void PropagationMatrix::apply(const Matrix& x, Matrix& out) const {
  if (x.rows() != num_nodes()) throw InvalidArgument("propagation: row count mismatch");
  ensure_shape(out, x.rows(), x.cols());
  out.fill(0.0);
  const auto& k = simd::kernels();
  for (std::size_t i = 0; i < num_nodes(); ++i) {
    double* dst = out.row(i).data();
    for (std::size_t e = row_offsets_[i]; e < row_offsets_[i + 1]; ++e) {
      k.axpy(values_[e], x.row(col_indices_[e]).data(), dst, x.cols());
    }
  }
}

PropagationMatrix PropagationMatrix::from_parts(std::vector<std::size_t> row_offsets,
                                                std::vector<NodeId> col_indices,
                                                std::vector<double> values) {
  if (row_offsets.empty() || row_offsets.back() != col_indices.size() ||
      col_indices.size() != values.size()) {
    throw InvalidArgument("propagation matrix: inconsistent CSR arrays");
  }
  PropagationMatrix p;
  p.row_offsets_ = std::move(row_offsets);
  p.col_indices_ = std::move(col_indices);
  p.values_ = std::move(values);
  return p;
}

Matrix PropagationMatrix::to_dense() const {
  Matrix m(num_nodes(), num_nodes());
  for (std::size_t i = 0; i < num_nodes(); ++i) {
    for (std::size_t e = row_offsets_[i]; e < row_offsets_[i + 1]; ++e) m(i, col_indices_[e]) = values_[e];
  }
  return m;
}

namespace {

PropagationMatrix build_propagation(const Graph& g, bool normalize) {
  if (g.directed()) throw InvalidArgument("propagation operators require an undirected graph");
  PropagationMatrix p;
  const std::size_t n = g.num_nodes();
  std::vector<std::size_t> offsets(n + 1, 0);
  std::vector<NodeId> cols;
  std::vector<double> vals;
  cols.reserve(g.num_entries() + n);
  vals.reserve(g.num_entries() + n);
  std::vector<double> inv_sqrt(n);
  for (NodeId i = 0; i < n; ++i) inv_sqrt[i] = 1.0 / std::sqrt(static_cast<double>(g.out_degree(i) + 1));
  for (NodeId i = 0; i < n; ++i) {
    bool self_done = false;
    auto emit = [&](NodeId j) {
      cols.push_back(j);
      vals.push_back(normalize ? inv_sqrt[i] * inv_sqrt[j] : 1.0);
    };
    for (NodeId j : g.neighbors(i)) {
      if (!self_done && j > i) {
        emit(i);
        self_done = true;
      }
      emit(j);
    }
    if (!self_done) emit(i);
    offsets[i + 1] = cols.size();
  }
  return PropagationMatrix::from_parts(std::move(offsets), std::move(cols), std::move(vals));
}

}  // namespace

PropagationMatrix normalize_adjacency(const Graph& g) { return build_propagation(g, true); }
PropagationMatrix sum_aggregation(const Graph& g) { return build_propagation(g, false); }

PropagationMatrix propagation_for(const Graph& g, Backbone backbone) {
  return backbone == Backbone::gcn ? normalize_adjacency(g) : sum_aggregation(g);
}

ClassMask::ClassMask(std::size_t total_classes) : visible_(total_classes, false) {}

ClassMask ClassMask::first(std::size_t visible, std::size_t total_classes) {
  if (visible > total_classes) throw InvalidArgument("more visible classes than total classes");
  ClassMask mask(total_classes);
  for (std::size_t c = 0; c < visible; ++c) mask.visible_[c] = true;
  return mask;
}

void ClassMask::show(Label c) {
  if (c < 0 || static_cast<std::size_t>(c) >= visible_.size()) {
    throw InvalidArgument("class " + std::to_string(c) + " outside the mask range");
  }
  visible_[c] = true;
}

std::size_t ClassMask::visible_count() const noexcept {
  return static_cast<std::size_t>(std::count(visible_.begin(), visible_.end(), true));
}

GnnModel GnnModel::create(std::size_t input_dim, std::size_t num_classes, const ModelConfig& cfg) {
  cfg.validate();
  if (input_dim == 0 || num_classes == 0) throw InvalidArgument("model dimensions must be positive");
  GnnModel m;
  m.backbone_ = cfg.backbone;
  m.input_dim_ = input_dim;
  m.hidden_dim_ = cfg.hidden_dim;
  m.num_classes_ = num_classes;

  std::mt19937_64 rng(cfg.seed);
  auto glorot = [&rng](std::size_t fan_in, std::size_t fan_out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Matrix w(fan_in, fan_out);
    for (double& x : w.values()) x = dist(rng);
    return w;
  };
  const std::size_t h = cfg.hidden_dim;
  if (cfg.backbone == Backbone::gcn) {
    m.params_.push_back(glorot(input_dim, h));
    m.params_.emplace_back(1, h);
    m.params_.push_back(glorot(h, num_classes));
    m.params_.emplace_back(1, num_classes);
  } else {
    m.params_.push_back(glorot(input_dim, h));
    m.params_.emplace_back(1, h);
    m.params_.push_back(glorot(h, h));
    m.params_.emplace_back(1, h);
    m.params_.push_back(glorot(h, h));
    m.params_.emplace_back(1, h);
    m.params_.push_back(glorot(h, num_classes));
    m.params_.emplace_back(1, num_classes);
  }
  return m;
}

std::size_t GnnModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.size();
  return n;
}

Gradients zeros_like(const GnnModel& model) {
  Gradients g;
  for (const auto& p : model.parameters()) g.emplace_back(p.rows(), p.cols());
  return g;
}

double squared_norm(const Gradients& grads) {
  double total = 0.0;
  for (const auto& g : grads) total += ftfer::squared_norm(g);
  return total;
}

void add_scaled(Gradients& a, const Gradients& b, double scale) {
  if (a.size() != b.size()) throw InvalidArgument("gradient collections differ in length");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].size() != b[i].size()) throw InvalidArgument("gradient tensor shape mismatch");
    simd::axpy(scale, b[i].values(), a[i].values());
  }
}

Matrix forward(const GnnModel& model, const PropagationMatrix& propagation, const Matrix& features) {
  return run_forward(model, propagation, features).logits;
}

LossAndGrad loss_and_grad(const GnnModel& model, const LabeledNodes& batch, const ClassMask& mask) {
  check_batch(model, batch, mask);
  const Tape tape = run_forward(model, batch.propagation, batch.features);
  Matrix d_logits(tape.logits.rows(), tape.logits.cols());
  const double scale = 1.0 / static_cast<double>(batch.nodes.size());
  LossAndGrad out;
  for (NodeId v : batch.nodes) {
    out.loss += masked_cross_entropy(tape.logits.row(v), batch.labels[v], mask, scale, d_logits.row(v));
  }
  out.loss *= scale;
  out.grads = zeros_like(model);
  Workspace ws;
  backward(model, batch.propagation, tape, d_logits, unique_rows(batch.nodes), out.grads, ws);
  return out;
}

double loss_value(const GnnModel& model, const LabeledNodes& batch, const ClassMask& mask) {
  check_batch(model, batch, mask);
  const Matrix logits = forward(model, batch.propagation, batch.features);
  std::vector<double> scratch(logits.cols());
  double loss = 0.0;
  for (NodeId v : batch.nodes) loss += masked_cross_entropy(logits.row(v), batch.labels[v], mask, 0.0, scratch);
  return loss / static_cast<double>(batch.nodes.size());
}

std::vector<double> per_node_grad_norms(const GnnModel& model, const LabeledNodes& batch,
                                        const ClassMask& mask) {
  check_batch(model, batch, mask);
  const Tape tape = run_forward(model, batch.propagation, batch.features);
  Matrix d_logits(tape.logits.rows(), tape.logits.cols());
  Gradients grads = zeros_like(model);
  Workspace ws;
  std::vector<double> norms;
  norms.reserve(batch.nodes.size());
  for (NodeId v : batch.nodes) {
    for (auto& g : grads) g.fill(0.0);
    auto row = d_logits.row(v);
    std::fill(row.begin(), row.end(), 0.0);
    masked_cross_entropy(tape.logits.row(v), batch.labels[v], mask, 1.0, row);
    const std::size_t r = v;
    backward(model, batch.propagation, tape, d_logits, std::span<const std::size_t>(&r, 1), grads, ws);
    std::fill(row.begin(), row.end(), 0.0);
    norms.push_back(std::sqrt(squared_norm(grads)));
  }
  return norms;
}

double per_node_grad_norm(const GnnModel& model, const PropagationMatrix& propagation,
                          const Matrix& features, NodeId node, Label label, const ClassMask& mask) {
  std::vector<Label> labels(features.rows(), label);
  const NodeId nodes[] = {node};
  return per_node_grad_norms(model, LabeledNodes{propagation, features, labels, nodes}, mask).front();
}

Label masked_argmax(std::span<const double> logits, const ClassMask& mask) {
  Label best = -1;
  for (std::size_t c = 0; c < logits.size(); ++c) {
    const auto label = static_cast<Label>(c);
    if (!mask.visible(label)) continue;
    if (best < 0 || logits[c] > logits[static_cast<std::size_t>(best)]) best = label;
  }
  return best;
}

double evaluate_accuracy(const GnnModel& model, const LabeledNodes& batch, const ClassMask& mask) {
  check_batch(model, batch, mask);
  const Matrix logits = forward(model, batch.propagation, batch.features);
  std::size_t correct = 0;
  for (NodeId v : batch.nodes) {
    if (masked_argmax(logits.row(v), mask) == batch.labels[v]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(batch.nodes.size());
}

}  // namespace ftfer::gnn
