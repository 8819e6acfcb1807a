#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "ftfer/error.hpp"
#include "ftfer/gnn.hpp"
#include "oracles.hpp"

using namespace ftfer;
using namespace ftfer::gnn;

namespace {

struct Fixture {
  Graph graph;
  PropagationMatrix propagation;
  Matrix features;
  std::vector<Label> labels;
  std::vector<NodeId> nodes;
};

Fixture make_fixture(std::size_t n, std::size_t feature_dim, std::size_t classes, Backbone backbone,
                     std::mt19937_64& rng) {
  Fixture f;
  f.graph = oracle::random_connected_graph(n, 0.3, rng);
  f.propagation = propagation_for(f.graph, backbone);
  f.features = oracle::random_matrix(n, feature_dim, rng);
  std::uniform_int_distribution<Label> lab(0, static_cast<Label>(classes) - 1);
  f.labels.resize(n);
  for (auto& l : f.labels) l = lab(rng);
  f.nodes.resize(n);
  std::iota(f.nodes.begin(), f.nodes.end(), NodeId{0});
  return f;
}

GnnModel make_model(std::size_t in, std::size_t classes, Backbone backbone, std::uint64_t seed,
                    std::size_t hidden = 5) {
  ModelConfig cfg;
  cfg.hidden_dim = hidden;
  cfg.backbone = backbone;
  cfg.seed = seed;
  GnnModel m = GnnModel::create(in, classes, cfg);
  // Nonzero biases so their gradients are exercised.
  std::mt19937_64 rng(seed + 1000);
  std::normal_distribution<double> d(0.0, 0.3);
  for (std::size_t t = 1; t < m.parameters().size(); t += 2) {
    for (double& x : m.parameters()[t].values()) x = d(rng);
  }
  return m;
}

ClassMask all_visible(std::size_t c) { return ClassMask::first(c, c); }

}  // namespace

TEST_CASE("normalized adjacency examples") {
  const Graph single = build_graph({}, 1, false);
  CHECK(normalize_adjacency(single).to_dense() == Matrix{{1.0}});

  const Graph edge = build_graph(std::vector<Edge>{{0, 1}}, 2, false);
  const Matrix p = normalize_adjacency(edge).to_dense();
  for (double v : p.values()) CHECK(v == doctest::Approx(0.5).epsilon(1e-15));

  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const Graph g = oracle::random_connected_graph(12, 0.25, rng);
    const Matrix pd = normalize_adjacency(g).to_dense();
    const Eigen::MatrixXd ref = oracle::dense_gcn_propagation(g);
    for (std::size_t i = 0; i < 12; ++i) {
      for (std::size_t j = 0; j < 12; ++j) {
        CHECK(pd(i, j) == doctest::Approx(ref(i, j)).epsilon(1e-14));
        CHECK(pd(i, j) == pd(j, i));
      }
    }
    // P * sqrt(d~) = sqrt(d~)
    Eigen::VectorXd sq(12);
    for (NodeId v = 0; v < 12; ++v) sq(v) = std::sqrt(1.0 + g.out_degree(v));
    CHECK((oracle::to_eigen(pd) * sq - sq).cwiseAbs().maxCoeff() <= 1e-13);
  }
  CHECK_THROWS_AS(normalize_adjacency(build_graph(std::vector<Edge>{{0, 1}}, 2, true)), InvalidArgument);
}

TEST_CASE("forward examples") {
  std::mt19937_64 rng(2);
  for (Backbone b : {Backbone::gcn, Backbone::gin}) {
    CAPTURE(to_string(b));
    Fixture f = make_fixture(9, 4, 3, b, rng);
    GnnModel m = make_model(4, 3, b, 7);
    const Matrix logits = forward(m, f.propagation, f.features);
    const Eigen::MatrixXd ref = oracle::forward(m, f.graph, f.features);
    REQUIRE(logits.rows() == 9);
    REQUIRE(logits.cols() == 3);
    for (std::size_t i = 0; i < 9; ++i)
      for (std::size_t c = 0; c < 3; ++c) CHECK(logits(i, c) == doctest::Approx(ref(i, c)).epsilon(1e-12));

    for (auto& p : m.parameters()) p.fill(0.0);
    const Matrix zero = forward(m, f.propagation, f.features);
    for (double v : zero.values()) CHECK(v == 0.0);

    CHECK_THROWS_AS(forward(m, f.propagation, Matrix(9, 5)), InvalidArgument);
  }
}

TEST_CASE("single node with unit weights passes its feature through") {
  ModelConfig cfg;
  cfg.hidden_dim = 1;
  GnnModel m = GnnModel::create(1, 1, cfg);
  m.parameters()[0] = Matrix{{1.0}};
  m.parameters()[2] = Matrix{{1.0}};
  const Graph g = build_graph({}, 1, false);
  CHECK(forward(m, normalize_adjacency(g), Matrix{{2.5}})(0, 0) == 2.5);
  CHECK(forward(m, normalize_adjacency(g), Matrix{{-2.5}})(0, 0) == 0.0);
}

TEST_CASE("uniform logits give log of the visible class count") {
  std::mt19937_64 rng(3);
  Fixture f = make_fixture(8, 3, 4, Backbone::gcn, rng);
  for (auto& l : f.labels) l = l % 2;
  GnnModel m = make_model(3, 4, Backbone::gcn, 1);
  for (auto& p : m.parameters()) p.fill(0.0);
  const LabeledNodes batch{f.propagation, f.features, f.labels, f.nodes};
  CHECK(loss_value(m, batch, ClassMask::first(2, 4)) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(loss_value(m, batch, ClassMask::first(4, 4)) == doctest::Approx(std::log(4.0)).epsilon(1e-14));
}

TEST_CASE("reverse-mode gradients match finite differences") {
  for (Backbone b : {Backbone::gcn, Backbone::gin}) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      CAPTURE(to_string(b));
      CAPTURE(seed);
      std::mt19937_64 rng(seed);
      Fixture f = make_fixture(6 + seed, 4, 3, b, rng);
      GnnModel m = make_model(4, 3, b, seed);
      const ClassMask mask = all_visible(3);
      const LabeledNodes batch{f.propagation, f.features, f.labels, f.nodes};
      const auto lg = loss_and_grad(m, batch, mask);
      CHECK(lg.loss == doctest::Approx(loss_value(m, batch, mask)).epsilon(1e-14));
      CHECK(oracle::gradient_check(m, lg.grads, [&] { return loss_value(m, batch, mask); }) <= 1e-4);
    }
  }
}

TEST_CASE("one visible class gives zero loss and zero output gradients") {
  std::mt19937_64 rng(4);
  Fixture f = make_fixture(7, 3, 3, Backbone::gcn, rng);
  for (auto& l : f.labels) l = 0;
  GnnModel m = make_model(3, 3, Backbone::gcn, 4);
  const auto lg = loss_and_grad(m, LabeledNodes{f.propagation, f.features, f.labels, f.nodes}, ClassMask::first(1, 3));
  CHECK(lg.loss == 0.0);
  CHECK(squared_norm(lg.grads[2]) == 0.0);
  CHECK(squared_norm(lg.grads[3]) == 0.0);
}

TEST_CASE("labels outside the mask are rejected") {
  std::mt19937_64 rng(5);
  Fixture f = make_fixture(5, 3, 3, Backbone::gcn, rng);
  f.labels.assign(5, 2);
  GnnModel m = make_model(3, 3, Backbone::gcn, 5);
  const LabeledNodes batch{f.propagation, f.features, f.labels, f.nodes};
  CHECK_THROWS_AS(loss_and_grad(m, batch, ClassMask::first(2, 3)), InvalidArgument);
  const std::vector<NodeId> none;
  CHECK_THROWS_AS(loss_value(m, LabeledNodes{f.propagation, f.features, f.labels, none}, all_visible(3)),
                  InvalidArgument);
}

TEST_CASE("per-node gradient norms") {
  for (Backbone b : {Backbone::gcn, Backbone::gin}) {
    CAPTURE(to_string(b));
    std::mt19937_64 rng(6);
    Fixture f = make_fixture(10, 4, 3, b, rng);
    GnnModel m = make_model(4, 3, b, 6);
    const ClassMask mask = all_visible(3);
    const auto norms = per_node_grad_norms(m, LabeledNodes{f.propagation, f.features, f.labels, f.nodes}, mask);
    REQUIRE(norms.size() == 10);
    for (NodeId v = 0; v < 10; ++v) {
      const std::vector<NodeId> one{v};
      const LabeledNodes single{f.propagation, f.features, f.labels, one};
      const auto lg = loss_and_grad(m, single, mask);
      CHECK(norms[v] == doctest::Approx(std::sqrt(squared_norm(lg.grads))).epsilon(1e-12));
      CHECK(per_node_grad_norm(m, f.propagation, f.features, v, f.labels[v], mask) ==
            doctest::Approx(norms[v]).epsilon(1e-12));
    }

    // Norm assembled from finite differences of the single-node loss.
    const std::vector<NodeId> one{3};
    const LabeledNodes single{f.propagation, f.features, f.labels, one};
    double fd2 = 0.0;
    for (auto& p : m.parameters()) {
      for (double& x : p.values()) {
        const double saved = x;
        x = saved + 1e-5;
        const double up = loss_value(m, single, mask);
        x = saved - 1e-5;
        const double down = loss_value(m, single, mask);
        x = saved;
        fd2 += std::pow((up - down) / 2e-5, 2);
      }
    }
    CHECK(std::fabs(std::sqrt(fd2) - norms[3]) <= 1e-4 * norms[3]);
  }
}

TEST_CASE("saturated prediction has vanishing gradient norm") {
  ModelConfig cfg;
  cfg.hidden_dim = 1;
  GnnModel m = GnnModel::create(1, 2, cfg);
  m.parameters()[0] = Matrix{{1.0}};
  m.parameters()[2] = Matrix{{100.0, -100.0}};
  const Graph g = build_graph({}, 1, false);
  const double norm = per_node_grad_norm(m, normalize_adjacency(g), Matrix{{1.0}}, 0, 0, all_visible(2));
  CHECK(norm < 1e-60);
}

TEST_CASE("accuracy and tie-breaking") {
  std::mt19937_64 rng(7);
  Fixture f = make_fixture(8, 3, 4, Backbone::gcn, rng);
  GnnModel m = make_model(3, 4, Backbone::gcn, 7);

  f.labels.assign(8, 2);
  ClassMask only_two(4);
  only_two.show(2);
  CHECK(evaluate_accuracy(m, LabeledNodes{f.propagation, f.features, f.labels, f.nodes}, only_two) == 1.0);

  for (auto& p : m.parameters()) p.fill(0.0);
  for (std::size_t i = 0; i < 8; ++i) f.labels[i] = static_cast<Label>(i % 2);
  CHECK(evaluate_accuracy(m, LabeledNodes{f.propagation, f.features, f.labels, f.nodes}, ClassMask::first(2, 4)) ==
        0.5);

  const std::vector<double> logits{1.0, 5.0, 5.0, 9.0};
  CHECK(masked_argmax(logits, ClassMask::first(3, 4)) == 1);
  CHECK(masked_argmax(logits, ClassMask::first(4, 4)) == 3);
  ClassMask sparse(4);
  sparse.show(0);
  CHECK(masked_argmax(logits, sparse) == 0);

  const std::vector<NodeId> none;
  CHECK_THROWS_AS(evaluate_accuracy(m, LabeledNodes{f.propagation, f.features, f.labels, none}, all_visible(4)),
                  InvalidArgument);
}

TEST_CASE("accuracy matches dense-oracle predictions") {
  std::mt19937_64 rng(8);
  Fixture f = make_fixture(12, 4, 5, Backbone::gcn, rng);
  GnnModel m = make_model(4, 5, Backbone::gcn, 8);
  const ClassMask mask = ClassMask::first(3, 5);
  for (auto& l : f.labels) l = l % 3;
  const Eigen::MatrixXd ref = oracle::forward(m, f.graph, f.features);
  int correct = 0;
  for (Eigen::Index i = 0; i < ref.rows(); ++i) {
    Eigen::Index best = 0;
    ref.row(i).head(3).maxCoeff(&best);
    correct += best == f.labels[i];
  }
  CHECK(evaluate_accuracy(m, LabeledNodes{f.propagation, f.features, f.labels, f.nodes}, mask) ==
        doctest::Approx(correct / 12.0));
}

TEST_CASE("permutation equivariance") {
  std::mt19937_64 rng(9);
  for (Backbone b : {Backbone::gcn, Backbone::gin}) {
    Fixture f = make_fixture(10, 3, 3, b, rng);
    GnnModel m = make_model(3, 3, b, 9);
    std::vector<NodeId> perm(10);
    std::iota(perm.begin(), perm.end(), NodeId{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<Edge> edges;
    for (const Edge& e : f.graph.edges()) edges.push_back({perm[e.u], perm[e.v]});
    const Graph pg = build_graph(edges, 10, false);
    Matrix px(10, 3);
    for (std::size_t i = 0; i < 10; ++i)
      for (std::size_t c = 0; c < 3; ++c) px(perm[i], c) = f.features(i, c);
    const Matrix a = forward(m, f.propagation, f.features);
    const Matrix bl = forward(m, propagation_for(pg, b), px);
    for (std::size_t i = 0; i < 10; ++i)
      for (std::size_t c = 0; c < 3; ++c) CHECK(std::fabs(a(i, c) - bl(perm[i], c)) <= 1e-12);
  }
}

TEST_CASE("initialization is seeded") {
  ModelConfig cfg;
  cfg.hidden_dim = 8;
  cfg.seed = 42;
  const GnnModel a = GnnModel::create(5, 3, cfg);
  const GnnModel b = GnnModel::create(5, 3, cfg);
  CHECK(a.parameters() == b.parameters());
  cfg.seed = 43;
  CHECK_FALSE(GnnModel::create(5, 3, cfg).parameters() == a.parameters());
  CHECK(a.parameter_count() == 5 * 8 + 8 + 8 * 3 + 3);
  for (double v : a.parameters()[1].values()) CHECK(v == 0.0);
}

TEST_CASE("model config validation") {
  ModelConfig cfg;
  cfg.hidden_dim = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg.hidden_dim = 4;
  cfg.learning_rate = 0.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  CHECK(parse_backbone("gin") == Backbone::gin);
  CHECK_THROWS_AS(parse_backbone("gat"), InvalidArgument);
}

TEST_CASE("adam") {
  ModelConfig cfg;
  cfg.hidden_dim = 2;
  GnnModel m = GnnModel::create(2, 2, cfg);
  const auto before = m.parameters();

  SUBCASE("zero gradient leaves parameters unchanged") {
    AdamState st = make_adam_state(m);
    adam_step(m, zeros_like(m), st, 0.1);
    CHECK(m.parameters() == before);
    CHECK(st.step == 1);
  }
  SUBCASE("first step moves by about lr in the sign direction") {
    AdamState st = make_adam_state(m);
    Gradients g = zeros_like(m);
    g[0](0, 0) = 0.3;
    g[0](1, 1) = -2e-3;
    adam_step(m, g, st, 0.01);
    CHECK(m.parameters()[0](0, 0) - before[0](0, 0) == doctest::Approx(-0.01 * 0.3 / (0.3 + 1e-8)).epsilon(1e-12));
    CHECK(m.parameters()[0](1, 1) - before[0](1, 1) == doctest::Approx(0.01 * 2e-3 / (2e-3 + 1e-8)).epsilon(1e-10));
  }
  SUBCASE("two steps on x^2 follow a scalar simulation") {
    AdamState st = make_adam_state(m);
    double& x = m.parameters()[0](0, 0);
    x = 1.0;
    double sx = 1.0, sm = 0.0, sv = 0.0;
    for (int t = 1; t <= 2; ++t) {
      Gradients g = zeros_like(m);
      g[0](0, 0) = 2.0 * x;
      adam_step(m, g, st, 0.1);

      const double grad = 2.0 * sx;
      sm = 0.9 * sm + 0.1 * grad;
      sv = 0.999 * sv + 0.001 * grad * grad;
      const double mh = sm / (1.0 - std::pow(0.9, t));
      const double vh = sv / (1.0 - std::pow(0.999, t));
      sx -= 0.1 * mh / (std::sqrt(vh) + 1e-8);
      CHECK(x == doctest::Approx(sx).epsilon(1e-12));
    }
    CHECK(x * x < 1.0);
  }
  SUBCASE("shape mismatch is rejected") {
    AdamState st = make_adam_state(m);
    Gradients g = zeros_like(m);
    g.pop_back();
    CHECK_THROWS_AS(adam_step(m, g, st, 0.1), InvalidArgument);
  }
}
