#include "ftfer/hodge.hpp"

#include <algorithm>
#include <cmath>

#include "ftfer/error.hpp"
#include "ftfer/simd.hpp"

namespace ftfer::hodge {

namespace {

double norm2(std::span<const double> v) { return std::sqrt(simd::dot(v, v)); }

void subtract_mean(std::span<double> v) {
  if (v.empty()) return;
  double sum = 0.0;
  for (double x : v) sum += x;
  const double mean = sum / static_cast<double>(v.size());
  for (double& x : v) x -= mean;
}

const Graph& require_undirected(const Graph& g, const char* op) {
  if (g.directed()) throw InvalidArgument(std::string(op) + " requires an undirected graph");
  return g;
}

// CSR entry -> canonical edge index (both orientations share an index).
std::vector<std::size_t> entry_edge_index(const Graph& g) {
  std::vector<std::size_t> index(g.num_entries());
  const auto offsets = g.row_offsets();
  std::size_t next = 0;
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    for (std::size_t p = offsets[u]; p < offsets[u + 1]; ++p) {
      const NodeId v = g.col_indices()[p];
      if (u < v) {
        index[p] = next++;
      } else {
        const auto row = g.neighbors(v);
        const auto q = offsets[v] + static_cast<std::size_t>(
                                        std::lower_bound(row.begin(), row.end(), u) - row.begin());
        index[p] = index[q];
      }
    }
  }
  return index;
}

std::size_t entry_of(const Graph& g, NodeId u, NodeId v) {
  const auto row = g.neighbors(u);
  return g.row_offsets()[u] +
         static_cast<std::size_t>(std::lower_bound(row.begin(), row.end(), v) - row.begin());
}

// Signed edge indices of the boundary of each triangle: +e(i,j), +e(j,k), -e(i,k).
struct TriangleBoundary {
  std::size_t ij, jk, ik;
};

std::vector<TriangleBoundary> triangle_boundaries(const Graph& g,
                                                  std::span<const Triangle> triangles) {
  const auto index = entry_edge_index(g);
  std::vector<TriangleBoundary> out;
  out.reserve(triangles.size());
  for (const Triangle& t : triangles) {
    out.push_back({index[entry_of(g, t.i, t.j)], index[entry_of(g, t.j, t.k)],
                   index[entry_of(g, t.i, t.k)]});
  }
  return out;
}

void check_flow_matches(const Graph& g, const EdgeFlow& x) {
  const auto edges = g.edges();
  if (edges.size() != x.size() || !std::equal(edges.begin(), edges.end(), x.edges().begin())) {
    throw InvalidArgument("edge flow is not defined on the edges of this graph");
  }
}

}  // namespace

std::size_t SolverConfig::iteration_limit(std::size_t system_size) const {
  return max_iterations.value_or(std::max<std::size_t>(10, 10 * system_size));
}

EdgeFlow::EdgeFlow(const Graph& g)
    : edges_(undirected_support(g).edges()), values_(edges_.size(), 0.0) {}

EdgeFlow::EdgeFlow(std::vector<Edge> canonical_edges, std::vector<double> values)
    : edges_(std::move(canonical_edges)), values_(std::move(values)) {
  if (edges_.size() != values_.size()) throw InvalidArgument("EdgeFlow: edge/value count mismatch");
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    if (edges_[i].u >= edges_[i].v) throw InvalidArgument("EdgeFlow: edges must satisfy u < v");
    if (i > 0 && !(edges_[i - 1].u < edges_[i].u ||
                   (edges_[i - 1].u == edges_[i].u && edges_[i - 1].v < edges_[i].v))) {
      throw InvalidArgument("EdgeFlow: edges must be strictly increasing");
    }
  }
}

std::optional<std::size_t> EdgeFlow::index_of(NodeId lo, NodeId hi) const {
  const Edge key{lo, hi};
  auto it = std::lower_bound(edges_.begin(), edges_.end(), key, [](const Edge& a, const Edge& b) {
    return a.u != b.u ? a.u < b.u : a.v < b.v;
  });
  if (it == edges_.end() || !(*it == key)) return std::nullopt;
  return static_cast<std::size_t>(it - edges_.begin());
}

std::optional<double> EdgeFlow::at(NodeId i, NodeId j) const {
  const bool forward = i < j;
  const auto idx = forward ? index_of(i, j) : index_of(j, i);
  if (!idx) return std::nullopt;
  return forward ? values_[*idx] : -values_[*idx];
}

void EdgeFlow::set(NodeId i, NodeId j, double value) {
  const bool forward = i < j;
  const auto idx = forward ? index_of(i, j) : index_of(j, i);
  if (!idx) {
    throw InvalidArgument("flow given on nonexistent edge (" + std::to_string(i) + "," +
                          std::to_string(j) + ")");
  }
  values_[*idx] = forward ? value : -value;
}

double EdgeFlow::norm() const { return norm2(values_); }

double inner_product(const EdgeFlow& a, const EdgeFlow& b) {
  if (a.size() != b.size()) throw InvalidArgument("inner_product: flows on different edge sets");
  return simd::dot(a.values(), b.values());
}

CgResult conjugate_gradient(const LinearOperator& apply, std::span<const double> rhs,
                            const Projector& project, double tolerance,
                            std::size_t max_iterations) {
  if (!(tolerance > 0.0)) throw InvalidArgument("solver tolerance must be positive");
  const std::size_t n = rhs.size();
  std::vector<double> b(rhs.begin(), rhs.end());
  if (project) project(b);
  const double scale = std::max(1.0, norm2(b));
  const double threshold = tolerance * scale;

  CgResult result;
  result.x.assign(n, 0.0);
  std::vector<double> r = b;
  std::vector<double> p = r;
  std::vector<double> ap(n);
  double rr = simd::dot(r, r);
  std::size_t it = 0;

  auto true_residual = [&] {
    apply(result.x, ap);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];
    if (project) project(r);
    return norm2(r);
  };

  while (true) {
    if (std::sqrt(rr) <= threshold) {
      // the recurrence can drift from the true residual; confirm before returning
      const double res = true_residual();
      if (res <= threshold) {
        result.iterations = it;
        result.relative_residual = res / scale;
        return result;
      }
      rr = res * res;
      p = r;
    }
    if (it >= max_iterations) break;
    apply(p, ap);
    const double pap = simd::dot(p, ap);
    if (!(pap > 0.0)) {
      // p lies in the null space: restart from the true residual
      const double res = true_residual();
      rr = res * res;
      if (res <= threshold) continue;
      p = r;
      ++it;
      continue;
    }
    const double alpha = rr / pap;
    simd::axpy(alpha, p, result.x);
    simd::axpy(-alpha, ap, r);
    if (project) project(r);
    const double rr_next = simd::dot(r, r);
    const double beta = rr_next / rr;
    rr = rr_next;
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
    ++it;
  }
  throw SolverError(true_residual() / scale, it);
}

std::vector<double> min_norm_laplacian_solve(const Graph& g, std::span<const double> rhs,
                                             const SolverConfig& cfg) {
  require_undirected(g, "min_norm_laplacian_solve");
  if (rhs.size() != g.num_nodes()) {
    throw InvalidArgument("min_norm_laplacian_solve: rhs length " + std::to_string(rhs.size()) +
                          " does not match " + std::to_string(g.num_nodes()) + " nodes");
  }
  std::vector<double> x(g.num_nodes(), 0.0);
  const ComponentLabeling comps = connected_components(g);
  std::vector<std::vector<NodeId>> members(comps.count);
  for (NodeId v = 0; v < g.num_nodes(); ++v) members[comps.component[v]].push_back(v);

  for (auto& nodes : members) {
    if (nodes.size() < 2) continue;  // L^+ of a singleton block is 0
    const Subgraph sub = induced_subgraph(g, NodeSet(nodes));
    std::vector<double> local_rhs(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) local_rhs[i] = rhs[sub.ids.new_to_old[i]];
    const Graph& lg = sub.graph;
    LinearOperator apply = [&lg](std::span<const double> in, std::span<double> out) {
      for (NodeId i = 0; i < lg.num_nodes(); ++i) {
        double acc = 0.0;
        for (NodeId j : lg.neighbors(i)) acc += in[i] - in[j];
        out[i] = acc;
      }
    };
    CgResult local = conjugate_gradient(apply, local_rhs, subtract_mean, cfg.tolerance,
                                        cfg.iteration_limit(nodes.size()));
    subtract_mean(local.x);
    for (std::size_t i = 0; i < nodes.size(); ++i) x[sub.ids.new_to_old[i]] = local.x[i];
  }
  return x;
}

PotentialScores hodge_potential_score(const Graph& g, const SolverConfig& cfg) {
  const auto div = divergence(antisymmetric_adjacency(g), g.num_nodes());
  PotentialScores scores;
  scores.values = min_norm_laplacian_solve(undirected_support(g), div, cfg);
  for (double& v : scores.values) v = -v;
  return scores;
}

EdgeFlow grad_of_potential(const Graph& g, std::span<const double> s) {
  if (s.size() != g.num_nodes()) {
    throw InvalidArgument("grad_of_potential: potential length does not match node count");
  }
  EdgeFlow flow(g);
  auto values = flow.values();
  const auto edges = flow.edges();
  for (std::size_t e = 0; e < edges.size(); ++e) values[e] = s[edges[e].v] - s[edges[e].u];
  return flow;
}

std::vector<double> flow_divergence(const EdgeFlow& x, std::size_t num_nodes) {
  std::vector<double> div(num_nodes, 0.0);
  const auto edges = x.edges();
  const auto values = x.values();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (edges[e].v >= num_nodes) throw InvalidArgument("flow_divergence: edge outside node range");
    div[edges[e].u] += values[e];
    div[edges[e].v] -= values[e];
  }
  return div;
}

std::vector<Triangle> enumerate_triangles(const Graph& g) {
  require_undirected(g, "enumerate_triangles");
  std::vector<Triangle> out;
  for (NodeId i = 0; i < g.num_nodes(); ++i) {
    const auto ni = g.neighbors(i);
    for (NodeId j : ni) {
      if (j <= i) continue;
      // sorted intersection of N(i) and N(j) restricted to k > j
      const auto nj = g.neighbors(j);
      auto a = std::upper_bound(ni.begin(), ni.end(), j);
      auto b = std::upper_bound(nj.begin(), nj.end(), j);
      while (a != ni.end() && b != nj.end()) {
        if (*a < *b) {
          ++a;
        } else if (*b < *a) {
          ++b;
        } else {
          out.push_back({i, j, *a});
          ++a;
          ++b;
        }
      }
    }
  }
  return out;
}

std::vector<double> curl(const Graph& g, const EdgeFlow& x) {
  require_undirected(g, "curl");
  check_flow_matches(g, x);
  const auto triangles = enumerate_triangles(g);
  const auto bounds = triangle_boundaries(g, triangles);
  const auto v = x.values();
  std::vector<double> out(triangles.size());
  for (std::size_t t = 0; t < bounds.size(); ++t) out[t] = v[bounds[t].ij] + v[bounds[t].jk] - v[bounds[t].ik];
  return out;
}

HodgeDecomposition decompose_edge_flow(const Graph& g, const EdgeFlow& x,
                                       const SolverConfig& cfg) {
  require_undirected(g, "decompose_edge_flow");
  check_flow_matches(g, x);
  const std::size_t m = x.size();

  HodgeDecomposition out;
  // least squares: min ||grad s - X||  <=>  L s = -div X
  std::vector<double> rhs = flow_divergence(x, g.num_nodes());
  for (double& r : rhs) r = -r;
  out.potential.values = min_norm_laplacian_solve(g, rhs, cfg);
  out.gradient = grad_of_potential(g, out.potential.values);

  std::vector<double> residual(m);
  for (std::size_t e = 0; e < m; ++e) residual[e] = x.values()[e] - out.gradient.values()[e];

  out.curl = EdgeFlow(g);
  out.harmonic = EdgeFlow(g);
  const std::size_t cycle_rank = m + connected_components(g).count - g.num_nodes();
  if (cycle_rank == 0) return out;  // forest: X is a pure gradient

  const auto triangles = enumerate_triangles(g);
  if (!triangles.empty()) {
    const auto bounds = triangle_boundaries(g, triangles);
    std::vector<double> flow_buf(m);
    auto boundary_adjoint = [&](std::span<const double> y, std::span<double> flow) {
      std::fill(flow.begin(), flow.end(), 0.0);
      for (std::size_t t = 0; t < bounds.size(); ++t) {
        flow[bounds[t].ij] += y[t];
        flow[bounds[t].jk] += y[t];
        flow[bounds[t].ik] -= y[t];
      }
    };
    auto boundary = [&](std::span<const double> flow, std::span<double> y) {
      for (std::size_t t = 0; t < bounds.size(); ++t) {
        y[t] = flow[bounds[t].ij] + flow[bounds[t].jk] - flow[bounds[t].ik];
      }
    };
    LinearOperator normal = [&](std::span<const double> y, std::span<double> out_y) {
      boundary_adjoint(y, flow_buf);
      boundary(flow_buf, out_y);
    };
    std::vector<double> curl_rhs(bounds.size());
    boundary(residual, curl_rhs);
    const CgResult sol = conjugate_gradient(normal, curl_rhs, {}, cfg.tolerance,
                                            cfg.iteration_limit(bounds.size()));
    boundary_adjoint(sol.x, out.curl.values());
  }
  for (std::size_t e = 0; e < m; ++e) out.harmonic.values()[e] = residual[e] - out.curl.values()[e];
  return out;
}

}  // namespace ftfer::hodge
