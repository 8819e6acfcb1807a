#pragma once

// Dense reference implementations used only by tests. Everything here works on
// small graphs and materializes full matrices on purpose.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "ftfer/gnn.hpp"
#include "ftfer/graph.hpp"
#include "ftfer/matrix.hpp"

namespace oracle {

using ftfer::Edge;
using ftfer::Graph;
using ftfer::NodeId;

inline Eigen::MatrixXd dense_adjacency(const Graph& g) {
  const auto n = static_cast<Eigen::Index>(g.num_nodes());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    for (NodeId v : g.neighbors(u)) a(u, v) = 1.0;
  }
  return a;
}

// D - A of the undirected support.
inline Eigen::MatrixXd dense_laplacian(const Graph& g) {
  Eigen::MatrixXd a = dense_adjacency(g);
  a = a.cwiseMax(a.transpose());
  Eigen::MatrixXd l = -a;
  for (Eigen::Index i = 0; i < a.rows(); ++i) l(i, i) = a.row(i).sum();
  return l;
}

// Abar(i,j) = A(i,j) - A(j,i) for directed graphs, A for undirected ones.
inline Eigen::MatrixXd dense_antisymmetric(const Graph& g) {
  const Eigen::MatrixXd a = dense_adjacency(g);
  if (!g.directed()) return a;
  return a - a.transpose();
}

// Moore-Penrose inverse of a symmetric matrix through its eigendecomposition.
inline Eigen::MatrixXd symmetric_pinv(const Eigen::MatrixXd& m, double cutoff = 1e-9) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  Eigen::VectorXd inv = es.eigenvalues();
  for (Eigen::Index i = 0; i < inv.size(); ++i) inv(i) = std::fabs(inv(i)) > cutoff ? 1.0 / inv(i) : 0.0;
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

inline std::vector<double> hps(const Graph& g) {
  const Eigen::MatrixXd abar = dense_antisymmetric(g);
  const Eigen::VectorXd div = abar * Eigen::VectorXd::Ones(abar.rows());
  const Eigen::VectorXd s = -symmetric_pinv(dense_laplacian(g)) * div;
  return {s.data(), s.data() + s.size()};
}

inline std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

inline Eigen::MatrixXd to_eigen(const ftfer::Matrix& m) {
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) = m(r, c);
  }
  return out;
}

inline Eigen::MatrixXd dense_gcn_propagation(const Graph& g) {
  Eigen::MatrixXd a = dense_adjacency(g);
  a += Eigen::MatrixXd::Identity(a.rows(), a.cols());
  const Eigen::VectorXd d = a.rowwise().sum().cwiseSqrt().cwiseInverse();
  return d.asDiagonal() * a * d.asDiagonal();
}

// Dense GCN / GIN forward from the model's parameter list.
inline Eigen::MatrixXd forward(const ftfer::gnn::GnnModel& model, const Graph& g, const ftfer::Matrix& x) {
  const auto& p = model.parameters();
  const Eigen::MatrixXd feats = to_eigen(x);
  auto bias = [](const Eigen::MatrixXd& m, const ftfer::Matrix& b) {
    Eigen::MatrixXd out = m;
    out.rowwise() += to_eigen(b).row(0);
    return out;
  };
  auto relu = [](const Eigen::MatrixXd& m) { return Eigen::MatrixXd(m.cwiseMax(0.0)); };
  if (model.backbone() == ftfer::gnn::Backbone::gcn) {
    const Eigen::MatrixXd pm = dense_gcn_propagation(g);
    const Eigen::MatrixXd h = relu(bias(pm * feats * to_eigen(p[0]), p[1]));
    return bias(pm * h * to_eigen(p[2]), p[3]);
  }
  const Eigen::MatrixXd s = dense_adjacency(g) + Eigen::MatrixXd::Identity(g.num_nodes(), g.num_nodes());
  auto mlp = [&](const Eigen::MatrixXd& in, std::size_t k) {
    return bias(relu(bias(in * to_eigen(p[k]), p[k + 1])) * to_eigen(p[k + 2]), p[k + 3]);
  };
  const Eigen::MatrixXd h = relu(mlp(s * feats, 0));
  return mlp(s * h, 4);
}

// Connected random graph: a random spanning tree plus each other pair with
// probability p.
inline Graph random_connected_graph(std::size_t n, double p, std::mt19937_64& rng) {
  std::vector<Edge> edges;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (NodeId v = 1; v < n; ++v) {
    std::uniform_int_distribution<NodeId> parent(0, v - 1);
    edges.push_back({parent(rng), v});
  }
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v = u + 1; v < n; ++v) {
      if (unit(rng) < p) edges.push_back({u, v});
    }
  }
  return ftfer::build_graph(edges, n, false);
}

// Random directed graph (may be disconnected) with arc probability p.
inline Graph random_directed_graph(std::size_t n, double p, std::mt19937_64& rng) {
  std::vector<Edge> edges;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v = 0; v < n; ++v) {
      if (u != v && unit(rng) < p) edges.push_back({u, v});
    }
  }
  return ftfer::build_graph(edges, n, true);
}

inline std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  std::vector<double> v(n);
  for (double& x : v) x = normal(rng);
  return v;
}

inline ftfer::Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  ftfer::Matrix m(r, c);
  for (double& x : m.values()) x = normal(rng);
  return m;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::fabs(a[i] - b[i]));
  return a.size() == b.size() ? d : INFINITY;
}

}  // namespace oracle

namespace oracle {

// Central finite differences of f over every parameter entry of model, compared
// with the analytic gradient per tensor: ||g - fd|| / max(||g||, ||fd||).
// Tensors whose gradients are both below 1e-10 count as agreeing.
template <typename LossFn>
double gradient_check(ftfer::gnn::GnnModel& model, const ftfer::gnn::Gradients& analytic, LossFn&& f,
                      double step = 1e-5) {
  double worst = 0.0;
  auto& params = model.parameters();
  for (std::size_t t = 0; t < params.size(); ++t) {
    double diff2 = 0.0, g2 = 0.0, fd2 = 0.0;
    auto values = params[t].values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + step;
      const double up = f();
      values[i] = saved - step;
      const double down = f();
      values[i] = saved;
      const double fd = (up - down) / (2.0 * step);
      const double g = analytic[t].values()[i];
      diff2 += (g - fd) * (g - fd);
      g2 += g * g;
      fd2 += fd * fd;
    }
    const double scale = std::sqrt(std::max(g2, fd2));
    if (scale < 1e-10) continue;
    worst = std::max(worst, std::sqrt(diff2) / scale);
  }
  return worst;
}

}  // namespace oracle
