#include "ftfer/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include "ftfer/error.hpp"
#include "ftfer/io.hpp"

namespace ftfer::data {

void SbmConfig::validate() const {
  if (num_classes < 1 || nodes_per_class < 1) throw InvalidArgument("SBM needs at least one class and node");
  if (!(p_out >= 0.0 && p_out < p_in && p_in <= 1.0)) {
    throw InvalidArgument("SBM probabilities must satisfy 0 <= p_out < p_in <= 1");
  }
  if (!(noise_sigma >= 0.0)) throw InvalidArgument("noise_sigma must be >= 0");
  if (feature_dim < 1) throw InvalidArgument("feature_dim must be >= 1");
  if (!(class_center_scale >= 0.0)) throw InvalidArgument("class_center_scale must be >= 0");
}

std::size_t DatasetBundle::num_classes() const {
  if (!graph.labels() || graph.labels()->empty()) return 0;
  return static_cast<std::size_t>(*std::max_element(graph.labels()->begin(), graph.labels()->end())) + 1;
}

DatasetBundle generate_sbm(const SbmConfig& cfg) {
  cfg.validate();
  const std::size_t n = cfg.num_classes * cfg.nodes_per_class;
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Matrix centers(cfg.num_classes, cfg.feature_dim);
  for (std::size_t c = 0; c < cfg.num_classes; ++c) {
    auto row = centers.row(c);
    double norm2 = 0.0;
    for (double& x : row) {
      x = gauss(rng);
      norm2 += x * x;
    }
    const double scale = norm2 > 0.0 ? cfg.class_center_scale / std::sqrt(norm2) : 0.0;
    for (double& x : row) x *= scale;
  }

  std::vector<Label> labels(n);
  for (std::size_t v = 0; v < n; ++v) labels[v] = static_cast<Label>(v / cfg.nodes_per_class);

  std::vector<Edge> edges;
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = u + 1; v < n; ++v) {
      const double p = labels[u] == labels[v] ? cfg.p_in : cfg.p_out;
      if (unit(rng) < p) edges.push_back({static_cast<NodeId>(u), static_cast<NodeId>(v)});
    }
  }

  Matrix features(n, cfg.feature_dim);
  for (std::size_t v = 0; v < n; ++v) {
    const auto center = centers.row(static_cast<std::size_t>(labels[v]));
    auto row = features.row(v);
    for (std::size_t d = 0; d < cfg.feature_dim; ++d) row[d] = center[d] + cfg.noise_sigma * gauss(rng);
  }

  DatasetBundle bundle;
  bundle.graph = build_graph(edges, n, false);
  bundle.graph.set_features(std::move(features));
  bundle.graph.set_labels(std::move(labels));
  bundle.name = "sbm";
  bundle.provenance = Provenance::generated;
  return bundle;
}

DatasetBundle load_dataset(const std::filesystem::path& edge_file,
                           const std::filesystem::path& feature_csv,
                           const std::filesystem::path& label_file) {
  for (const auto& p : {edge_file, feature_csv, label_file}) {
    if (!std::filesystem::exists(p)) throw Error("dataset file not found: '" + p.string() + "'");
  }
  std::vector<Label> labels = io::read_labels(label_file);
  Matrix features = io::read_features_csv(feature_csv);
  if (features.rows() != labels.size()) {
    throw InvalidArgument("feature rows (" + std::to_string(features.rows()) +
                          ") and label rows (" + std::to_string(labels.size()) + ") differ");
  }
  const io::EdgeList list = io::read_edge_list(edge_file, labels.size());
  DatasetBundle bundle;
  for (const Edge& e : list.edges) {
    if (e.u == e.v) ++bundle.preprocessing.self_loops_removed;
  }
  bundle.graph = build_graph(list.edges, labels.size(), true);
  bundle.graph.set_features(std::move(features));
  bundle.graph.set_labels(std::move(labels));
  bundle.name = edge_file.stem().string();
  bundle.provenance = Provenance::loaded;
  return bundle;
}

void write_dataset(const DatasetBundle& bundle, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  io::write_edge_list(dir / "edges.tsv", bundle.graph);
  if (bundle.graph.features()) io::write_features_csv(dir / "features.csv", *bundle.graph.features());
  if (bundle.graph.labels()) io::write_labels(dir / "labels.csv", *bundle.graph.labels());
}

DatasetBundle preprocess(const DatasetBundle& bundle) {
  if (!bundle.graph.labels()) throw InvalidArgument("preprocess: dataset has no labels");
  const Graph undirected = undirected_support(bundle.graph);
  if (undirected.num_nodes() == 0) throw InvalidArgument("preprocess: empty graph");
  Subgraph lcc = largest_connected_component(undirected);

  DatasetBundle out;
  out.name = bundle.name;
  out.provenance = bundle.provenance;
  out.preprocessing = bundle.preprocessing;
  out.preprocessing.applied = true;
  out.preprocessing.input_nodes = bundle.graph.num_nodes();
  out.preprocessing.input_arcs = bundle.graph.num_entries();
  out.preprocessing.nodes_dropped = undirected.num_nodes() - lcc.graph.num_nodes();
  out.preprocessing.edges_dropped = undirected.num_edges() - lcc.graph.num_edges();

  std::vector<Label> labels = *lcc.graph.labels();
  const std::set<Label> present(labels.begin(), labels.end());
  const Label old_max = bundle.graph.labels()->empty()
                            ? -1
                            : *std::max_element(bundle.graph.labels()->begin(), bundle.graph.labels()->end());
  std::vector<Label> map(static_cast<std::size_t>(old_max + 1), -1);
  Label next = 0;
  for (Label c : present) map[static_cast<std::size_t>(c)] = next++;
  for (Label& y : labels) y = map[static_cast<std::size_t>(y)];
  out.preprocessing.classes_dropped = map.size() - present.size();
  out.preprocessing.label_map = std::move(map);

  out.graph = std::move(lcc.graph);
  out.graph.set_labels(std::move(labels));
  if (out.graph.num_nodes() == 0) throw InvalidArgument("preprocess: empty result");
  return out;
}

}  // namespace ftfer::data
