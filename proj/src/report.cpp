#include "ftfer/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "ftfer/config.hpp"
#include "ftfer/error.hpp"
#include "ftfer/io.hpp"

namespace ftfer::report {

using nlohmann::json;

namespace {

json matrix_json(const harness::AccuracyMatrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.size(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < m.size(); ++j) {
      const auto v = m.at(i, j);
      row.push_back(v ? json(*v) : json(nullptr));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

bool close(double a, double b, double tol) { return std::fabs(a - b) <= tol; }

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

}  // namespace

std::string read_text(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + file.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text(const std::filesystem::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("cannot write " + file.string());
  out << text;
  if (!out) throw InvalidArgument("write failed for " + file.string());
}

json summary_json(const harness::RunResult& result, const std::string& dataset_name) {
  json tasks = json::array();
  for (std::size_t i = 0; i < result.buffer_stats.size(); ++i) {
    const auto& b = result.buffer_stats[i];
    json t = {{"buffer_nodes", b.nodes}, {"buffer_edges", b.edges}, {"buffer_bytes", b.bytes}};
    if (i < result.visible_classes.size()) t["visible_classes"] = result.visible_classes[i];
    tasks.push_back(std::move(t));
  }
  json s;
  s["dataset"] = dataset_name;
  s["method"] = std::string(harness::to_string(result.config.method));
  s["num_tasks"] = result.matrix.size();
  s["average_accuracy"] = result.average_accuracy;
  s["average_forgetting"] = result.average_forgetting ? json(*result.average_forgetting) : json(nullptr);
  s["matrix"] = matrix_json(result.matrix);
  s["tasks"] = std::move(tasks);
  s["config"] = config::to_json(result.config);
  s["timings_file"] = "timings.json";
  return s;
}

json timings_json(const harness::RunResult& result) {
  json tasks = json::array();
  double train = 0.0;
  for (const auto& t : result.task_timings) {
    tasks.push_back({{"train_seconds", t.train_seconds},
                     {"scoring_seconds", t.scoring_seconds},
                     {"eval_seconds", t.eval_seconds}});
    train += t.train_seconds;
  }
  return {{"preprocess_seconds", result.preprocess_seconds}, {"total_train_seconds", train}, {"tasks", tasks}};
}

void write_run_dir(const harness::RunResult& result, const std::string& dataset_name,
                   const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_text(dir / "matrix.csv", result.matrix.to_csv());
  write_text(dir / "summary.json", summary_json(result, dataset_name).dump(2) + "\n");
  write_text(dir / "timings.json", timings_json(result).dump(2) + "\n");
}

RunDirReport check_run_dir(const std::filesystem::path& dir, double tolerance) {
  RunDirReport r;
  r.matrix = harness::AccuracyMatrix::from_csv(read_text(dir / "matrix.csv"));
  try {
    r.summary = json::parse(read_text(dir / "summary.json"));
  } catch (const json::parse_error& e) {
    throw ParseError((dir / "summary.json").string(), 0, e.what());
  }
  const auto timings_path = dir / "timings.json";
  if (std::filesystem::exists(timings_path)) {
    try {
      r.timings = json::parse(read_text(timings_path));
    } catch (const json::parse_error& e) {
      throw ParseError(timings_path.string(), 0, e.what());
    }
  }

  const json& s = r.summary;
  if (!s.contains("average_accuracy") || !s["average_accuracy"].is_number()) {
    throw ConsistencyError("summary.json has no numeric average_accuracy");
  }
  const std::size_t k = r.matrix.size();
  if (s.value("num_tasks", std::size_t{0}) != k) {
    throw ConsistencyError("matrix.csv has " + std::to_string(k) + " rows but summary.json records " +
                           std::to_string(s.value("num_tasks", std::size_t{0})) + " tasks");
  }

  if (s.contains("matrix")) {
    const json& stored = s["matrix"];
    if (!stored.is_array() || stored.size() != k) throw ConsistencyError("stored matrix has the wrong shape");
    for (std::size_t i = 0; i < k; ++i) {
      if (!stored[i].is_array() || stored[i].size() != k) throw ConsistencyError("stored matrix has the wrong shape");
      for (std::size_t j = 0; j < k; ++j) {
        const auto v = r.matrix.at(i, j);
        const json& cell = stored[i][j];
        if (cell.is_null() != !v || (v && !close(cell.get<double>(), *v, tolerance))) {
          throw ConsistencyError("matrix.csv cell (" + std::to_string(i) + "," + std::to_string(j) +
                                 ") disagrees with summary.json");
        }
      }
    }
  }

  try {
    r.average_accuracy = harness::average_accuracy(r.matrix);
  } catch (const InvalidArgument& e) {
    throw ConsistencyError(std::string("cannot recompute average accuracy: ") + e.what());
  }
  const double stored_aa = s["average_accuracy"].get<double>();
  if (!close(stored_aa, r.average_accuracy, tolerance)) {
    throw ConsistencyError("average accuracy " + io::format_double(r.average_accuracy) +
                           " recomputed from matrix.csv, summary.json has " + io::format_double(stored_aa));
  }

  const json af = s.value("average_forgetting", json(nullptr));
  if (af.is_null()) {
    // Joint training fills only the last row, so forgetting is undefined.
    bool diagonal_defined = true;
    for (std::size_t i = 0; i + 1 < k; ++i) diagonal_defined = diagonal_defined && r.matrix.at(i, i).has_value();
    if (diagonal_defined && k > 1) throw ConsistencyError("summary.json omits average forgetting for a full matrix");
    if (k == 1) r.average_forgetting = 0.0;
  } else {
    try {
      r.average_forgetting = harness::average_forgetting(r.matrix);
    } catch (const InvalidArgument& e) {
      throw ConsistencyError(std::string("cannot recompute average forgetting: ") + e.what());
    }
    if (!close(af.get<double>(), *r.average_forgetting, tolerance)) {
      throw ConsistencyError("average forgetting " + io::format_double(*r.average_forgetting) +
                             " recomputed from matrix.csv, summary.json has " +
                             io::format_double(af.get<double>()));
    }
  }
  return r;
}

std::string format_report(const RunDirReport& r) {
  std::ostringstream os;
  const json& s = r.summary;
  os << "method   " << s.value("method", std::string("?")) << "\n";
  os << "dataset  " << s.value("dataset", std::string("?")) << "\n";
  os << "tasks    " << r.matrix.size() << "\n";
  os << "AA       " << fixed(r.average_accuracy, 4) << "\n";
  os << "AF       " << (r.average_forgetting ? fixed(*r.average_forgetting, 4) : std::string("n/a")) << "\n\n";

  os << "task  acc_last  acc_diag  buf_nodes  buf_edges  buf_bytes  train_s\n";
  const std::size_t k = r.matrix.size();
  const json tasks = s.value("tasks", json::array());
  const json ttasks = r.timings ? r.timings->value("tasks", json::array()) : json::array();
  for (std::size_t i = 0; i < k; ++i) {
    char line[160];
    const auto last = k ? r.matrix.at(k - 1, i) : std::nullopt;
    const auto diag = r.matrix.at(i, i);
    const json task = i < tasks.size() ? tasks[i] : json::object();
    const std::string train_s =
        i < ttasks.size() ? fixed(ttasks[i].value("train_seconds", 0.0), 3) : std::string("-");
    std::snprintf(line, sizeof line, "%4zu  %8s  %8s  %9s  %9s  %9s  %7s\n", i,
                  last ? fixed(*last, 4).c_str() : "-", diag ? fixed(*diag, 4).c_str() : "-",
                  task.contains("buffer_nodes") ? std::to_string(task["buffer_nodes"].get<std::size_t>()).c_str() : "-",
                  task.contains("buffer_edges") ? std::to_string(task["buffer_edges"].get<std::size_t>()).c_str() : "-",
                  task.contains("buffer_bytes") ? std::to_string(task["buffer_bytes"].get<std::size_t>()).c_str() : "-",
                  train_s.c_str());
    os << line;
  }
  if (r.timings) {
    os << "\npreprocess " << fixed(r.timings->value("preprocess_seconds", 0.0), 3) << " s, training "
       << fixed(r.timings->value("total_train_seconds", 0.0), 3) << " s\n";
  }
  return os.str();
}

}  // namespace ftfer::report
