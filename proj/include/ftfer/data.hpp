#pragma once

// Synthetic stochastic-block-model benchmarks, dataset files and the
// preprocessing pipeline (undirect, strip self-loops, keep the largest
// connected component, compact labels).

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ftfer/graph.hpp"

namespace ftfer::data {

struct SbmConfig {
  std::size_t num_classes = 10;
  std::size_t nodes_per_class = 150;
  double p_in = 0.05;
  double p_out = 0.002;
  std::size_t feature_dim = 32;
  double class_center_scale = 1.0;
  double noise_sigma = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class Provenance { generated, loaded };

struct PreprocessRecord {
  bool applied = false;
  std::size_t input_nodes = 0;
  std::size_t input_arcs = 0;         // arcs of the raw graph after self-loop removal
  std::size_t self_loops_removed = 0;  // counted while loading
  std::size_t nodes_dropped = 0;      // outside the largest component
  std::size_t edges_dropped = 0;      // undirected edges lost with those nodes
  std::size_t classes_dropped = 0;    // classes with no node left
  std::vector<Label> label_map;       // old label -> compacted label, -1 if dropped
};

struct DatasetBundle {
  Graph graph;  // carries features and labels
  std::string name;
  Provenance provenance = Provenance::generated;
  PreprocessRecord preprocessing;

  std::size_t num_classes() const;
};

// Labels are node / nodes_per_class. Undirected, no self-loops. Features are
// a per-class Gaussian direction scaled to class_center_scale plus isotropic
// noise of standard deviation noise_sigma.
DatasetBundle generate_sbm(const SbmConfig& cfg);

// Raw (directed, unpreprocessed) bundle from an edge list, a feature CSV and
// a label file. Node count is the number of labels.
DatasetBundle load_dataset(const std::filesystem::path& edge_file,
                           const std::filesystem::path& feature_csv,
                           const std::filesystem::path& label_file);

// Writes edges.tsv, features.csv and labels.csv into dir.
void write_dataset(const DatasetBundle& bundle, const std::filesystem::path& dir);

DatasetBundle preprocess(const DatasetBundle& bundle);

}  // namespace ftfer::data
