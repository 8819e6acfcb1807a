#pragma once

// Hodge potential scores and the edge-flow Hodge decomposition on graphs.
//
// The potential of a graph is the minimum-norm solution of
//     L s = -div(Abar),   L = D - A of the undirected support,
// where Abar is the antisymmetric adjacency. L^+ is applied by conjugate
// gradients on each connected component with the constant null vector
// deflated, so the result has zero mean on every component.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "ftfer/graph.hpp"

namespace ftfer::hodge {

struct SolverConfig {
  double tolerance = 1e-10;                    // relative residual
  std::optional<std::size_t> max_iterations;  // default 10 * (system size)

  std::size_t iteration_limit(std::size_t system_size) const;
};

struct PotentialScores {
  std::vector<double> values;
  bool mean_zero_per_component = true;
};

// Antisymmetric function on the edges of an undirected graph, stored on the
// canonical orientation u < v in lexicographic edge order.
class EdgeFlow {
 public:
  EdgeFlow() = default;
  // Zero flow on the edges of g (its undirected support if directed).
  explicit EdgeFlow(const Graph& g);
  EdgeFlow(std::vector<Edge> canonical_edges, std::vector<double> values);

  std::span<const Edge> edges() const noexcept { return edges_; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }

  // X(i, j) with X(j, i) = -X(i, j); nullopt when {i, j} is not an edge.
  std::optional<double> at(NodeId i, NodeId j) const;
  // Sets X(i, j) (and implicitly X(j, i)); throws if {i, j} is not an edge.
  void set(NodeId i, NodeId j, double value);

  double norm() const;

 private:
  std::optional<std::size_t> index_of(NodeId lo, NodeId hi) const;

  std::vector<Edge> edges_;
  std::vector<double> values_;
};

double inner_product(const EdgeFlow& a, const EdgeFlow& b);

struct Triangle {
  NodeId i, j, k;  // i < j < k
  bool operator==(const Triangle&) const = default;
};

struct HodgeDecomposition {
  PotentialScores potential;  // least-squares potential of the gradient part
  EdgeFlow gradient;
  EdgeFlow curl;
  EdgeFlow harmonic;
};

using LinearOperator = std::function<void(std::span<const double>, std::span<double>)>;
using Projector = std::function<void(std::span<double>)>;

struct CgResult {
  std::vector<double> x;
  std::size_t iterations = 0;
  double relative_residual = 0.0;  // ||b - A x|| / max(1, ||b||)
};

// Conjugate gradients for a symmetric positive semidefinite operator on a
// subspace. `project` (may be empty) maps vectors onto the subspace and is
// applied to the right-hand side, the residual and the returned iterate.
// Throws SolverError when the tolerance is not reached within max_iterations.
CgResult conjugate_gradient(const LinearOperator& apply, std::span<const double> rhs,
                            const Projector& project, double tolerance,
                            std::size_t max_iterations);

// x = L^+ rhs for undirected g.
std::vector<double> min_norm_laplacian_solve(const Graph& g, std::span<const double> rhs,
                                             const SolverConfig& cfg = {});

// s* = -L^+ div(Abar); accepts directed or undirected graphs.
PotentialScores hodge_potential_score(const Graph& g, const SolverConfig& cfg = {});

// (grad s)(i, j) = s_j - s_i on every edge.
EdgeFlow grad_of_potential(const Graph& g, std::span<const double> s);

// (div X)(i) = sum_j X(i, j).
std::vector<double> flow_divergence(const EdgeFlow& x, std::size_t num_nodes);

std::vector<Triangle> enumerate_triangles(const Graph& g);

// Per triangle (i, j, k): X(i, j) + X(j, k) + X(k, i).
std::vector<double> curl(const Graph& g, const EdgeFlow& x);

// Orthogonal split X = gradient + curl + harmonic for undirected g.
HodgeDecomposition decompose_edge_flow(const Graph& g, const EdgeFlow& x,
                                       const SolverConfig& cfg = {});

}  // namespace ftfer::hodge
