#pragma once

// Plain-text formats:
//   edge list   one "u<TAB>v" pair per line; '#' starts a comment
//   flow file   one "u<TAB>v<TAB>value" triple per line; value is X(u,v)
//   features    header-less CSV of doubles, row i = node i
//   labels      one integer per line, line i = node i

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ftfer/graph.hpp"
#include "ftfer/matrix.hpp"

namespace ftfer::io {

struct EdgeList {
  std::vector<Edge> edges;
  std::size_t num_nodes = 0;  // max id + 1 unless overridden
};

struct FlowEntry {
  NodeId u;
  NodeId v;
  double value;
};

EdgeList parse_edge_list(std::istream& in, const std::string& source,
                         std::optional<std::size_t> num_nodes = std::nullopt);
EdgeList read_edge_list(const std::filesystem::path& path,
                        std::optional<std::size_t> num_nodes = std::nullopt);
void write_edge_list(const std::filesystem::path& path, const Graph& g);

std::vector<FlowEntry> read_flow_file(const std::filesystem::path& path);

Matrix read_features_csv(const std::filesystem::path& path);
void write_features_csv(const std::filesystem::path& path, const Matrix& features);

std::vector<Label> read_labels(const std::filesystem::path& path);
void write_labels(const std::filesystem::path& path, const std::vector<Label>& labels);

// Shortest decimal form that round-trips to the same double.
std::string format_double(double value);

}  // namespace ftfer::io
