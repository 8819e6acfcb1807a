#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string_view>

#include "ftfer/error.hpp"
#include "ftfer/io.hpp"

namespace ftfer::io {

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  return out;
}

std::string_view strip_comment(std::string_view line) {
  if (auto pos = line.find('#'); pos != std::string_view::npos) line = line.substr(0, pos);
  while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) {
    line.remove_suffix(1);
  }
  while (!line.empty() && (line.front() == ' ' || line.front() == '\t')) line.remove_prefix(1);
  return line;
}

std::vector<std::string_view> split_fields(std::string_view line, char sep) {
  std::vector<std::string_view> fields;
  if (sep == '\t') {
    // tabs or runs of spaces
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && (line[i] == '\t' || line[i] == ' ')) ++i;
      const std::size_t start = i;
      while (i < line.size() && line[i] != '\t' && line[i] != ' ') ++i;
      if (i > start) fields.push_back(line.substr(start, i - start));
    }
    return fields;
  }
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == sep) {
      std::string_view f = line.substr(start, i - start);
      while (!f.empty() && f.front() == ' ') f.remove_prefix(1);
      while (!f.empty() && f.back() == ' ') f.remove_suffix(1);
      fields.push_back(f);
      start = i + 1;
    }
  }
  return fields;
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace

EdgeList parse_edge_list(std::istream& in, const std::string& source,
                         std::optional<std::size_t> num_nodes) {
  EdgeList list;
  std::string raw;
  std::size_t line_no = 0;
  std::size_t max_id_plus_one = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = strip_comment(raw);
    if (line.empty()) continue;
    const auto fields = split_fields(line, '\t');
    std::uint64_t u = 0;
    std::uint64_t v = 0;
    if (fields.size() != 2 || !parse_number(fields[0], u) || !parse_number(fields[1], v) ||
        u >= kNoNode || v >= kNoNode) {
      throw ParseError(source, line_no, "expected 'u<TAB>v' with non-negative integer ids");
    }
    list.edges.push_back({static_cast<NodeId>(u), static_cast<NodeId>(v)});
    max_id_plus_one = std::max<std::size_t>(max_id_plus_one, std::max(u, v) + 1);
  }
  list.num_nodes = num_nodes.value_or(max_id_plus_one);
  return list;
}

EdgeList read_edge_list(const std::filesystem::path& path, std::optional<std::size_t> num_nodes) {
  auto in = open_input(path);
  return parse_edge_list(in, path.string(), num_nodes);
}

void write_edge_list(const std::filesystem::path& path, const Graph& g) {
  auto out = open_output(path);
  out << "# " << g.num_nodes() << " nodes, " << g.num_edges()
      << (g.directed() ? " arcs\n" : " undirected edges\n");
  for (const Edge& e : g.edges()) out << e.u << '\t' << e.v << '\n';
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

std::vector<FlowEntry> read_flow_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<FlowEntry> flows;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = strip_comment(raw);
    if (line.empty()) continue;
    const auto fields = split_fields(line, '\t');
    std::uint64_t u = 0;
    std::uint64_t v = 0;
    double value = 0.0;
    if (fields.size() != 3 || !parse_number(fields[0], u) || !parse_number(fields[1], v) ||
        !parse_number(fields[2], value) || u >= kNoNode || v >= kNoNode) {
      throw ParseError(path.string(), line_no, "expected 'u<TAB>v<TAB>value'");
    }
    flows.push_back({static_cast<NodeId>(u), static_cast<NodeId>(v), value});
  }
  return flows;
}

Matrix read_features_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<double> values;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
    if (line.empty()) continue;
    const auto fields = split_fields(line, ',');
    if (rows == 0) cols = fields.size();
    if (fields.size() != cols) {
      throw ParseError(path.string(), line_no,
                       "expected " + std::to_string(cols) + " columns, found " +
                           std::to_string(fields.size()));
    }
    for (auto f : fields) {
      double x = 0.0;
      if (!parse_number(f, x)) throw ParseError(path.string(), line_no, "not a number: '" + std::string(f) + "'");
      values.push_back(x);
    }
    ++rows;
  }
  Matrix m(rows, cols);
  std::copy(values.begin(), values.end(), m.values().begin());
  return m;
}

void write_features_csv(const std::filesystem::path& path, const Matrix& features) {
  auto out = open_output(path);
  for (std::size_t r = 0; r < features.rows(); ++r) {
    const auto row = features.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) out << ',';
      out << format_double(row[c]);
    }
    out << '\n';
  }
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

std::vector<Label> read_labels(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<Label> labels;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = strip_comment(raw);
    if (line.empty()) continue;
    Label y = 0;
    if (!parse_number(line, y) || y < 0) {
      throw ParseError(path.string(), line_no, "expected a non-negative integer label");
    }
    labels.push_back(y);
  }
  return labels;
}

void write_labels(const std::filesystem::path& path, const std::vector<Label>& labels) {
  auto out = open_output(path);
  for (Label y : labels) out << y << '\n';
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

}  // namespace ftfer::io
