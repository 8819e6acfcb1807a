#include "ftfer/config.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <string_view>

#include "ftfer/error.hpp"
#include "ftfer/io.hpp"

namespace ftfer::config {

using nlohmann::json;

namespace {

void require_object(const json& j, const std::string& where) {
  if (!j.is_object()) throw InvalidArgument(where + ": expected a JSON object");
}

void reject_unknown(const json& j, const std::string& where, std::initializer_list<std::string_view> allowed) {
  require_object(j, where);
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
      throw InvalidArgument(where + ": unknown key '" + it.key() + "'");
    }
  }
}

std::string key_path(const std::string& where, const std::string& key) { return where + "." + key; }

double get_number(const json& j, const std::string& where, const std::string& key, double fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j[key];
  if (!v.is_number()) throw InvalidArgument(key_path(where, key) + ": expected a number");
  return v.get<double>();
}

std::uint64_t get_unsigned(const json& j, const std::string& where, const std::string& key,
                           std::uint64_t fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j[key];
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    throw InvalidArgument(key_path(where, key) + ": expected a nonnegative integer");
  }
  return v.get<std::uint64_t>();
}

std::string get_string(const json& j, const std::string& where, const std::string& key,
                       const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j[key];
  if (!v.is_string()) throw InvalidArgument(key_path(where, key) + ": expected a string");
  return v.get<std::string>();
}

// Rewraps errors from enum parsers and validate() with the key path.
template <typename F>
auto with_context(const std::string& where, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(where + ": " + e.what());
  }
}

gnn::ModelConfig parse_model(const json& j) {
  const std::string where = "run.model";
  reject_unknown(j, where, {"hidden_dim", "learning_rate", "epochs", "backbone"});
  gnn::ModelConfig m;
  m.hidden_dim = get_unsigned(j, where, "hidden_dim", m.hidden_dim);
  m.learning_rate = get_number(j, where, "learning_rate", m.learning_rate);
  m.epochs = get_unsigned(j, where, "epochs", m.epochs);
  const std::string backbone = get_string(j, where, "backbone", std::string(gnn::to_string(m.backbone)));
  m.backbone = with_context(where, [&] { return gnn::parse_backbone(backbone); });
  return m;
}

hodge::SolverConfig parse_solver(const json& j) {
  const std::string where = "run.solver";
  reject_unknown(j, where, {"tolerance", "max_iterations"});
  hodge::SolverConfig s;
  s.tolerance = get_number(j, where, "tolerance", s.tolerance);
  if (j.contains("max_iterations")) s.max_iterations = get_unsigned(j, where, "max_iterations", 0);
  return s;
}

DatasetFiles parse_files(const json& j, const std::filesystem::path& base_dir) {
  const std::string where = "dataset.files";
  reject_unknown(j, where, {"edges", "features", "labels"});
  DatasetFiles f;
  for (const char* key : {"edges", "features", "labels"}) {
    if (!j.contains(key)) throw InvalidArgument(key_path(where, key) + ": required");
  }
  auto resolve = [&](const char* key) {
    std::filesystem::path p = get_string(j, where, key, "");
    return p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  };
  f.edges = resolve("edges");
  f.features = resolve("features");
  f.labels = resolve("labels");
  return f;
}

template <typename T, typename F>
std::vector<T> parse_list(const json& j, const std::string& where, F&& item) {
  if (!j.is_array()) throw InvalidArgument(where + ": expected an array");
  if (j.empty()) throw InvalidArgument(where + ": must not be empty");
  std::vector<T> out;
  for (const json& v : j) out.push_back(item(v));
  return out;
}

SweepAxes parse_sweep(const json& j) {
  const std::string where = "sweep";
  reject_unknown(j, where, {"beta", "seed", "method"});
  SweepAxes axes;
  if (j.contains("beta")) {
    axes.beta = parse_list<double>(j["beta"], "sweep.beta", [](const json& v) {
      if (!v.is_number()) throw InvalidArgument("sweep.beta: expected numbers");
      return v.get<double>();
    });
  }
  if (j.contains("seed")) {
    axes.seed = parse_list<std::uint64_t>(j["seed"], "sweep.seed", [](const json& v) {
      if (!v.is_number_unsigned()) throw InvalidArgument("sweep.seed: expected nonnegative integers");
      return v.get<std::uint64_t>();
    });
  }
  if (j.contains("method")) {
    axes.method = parse_list<harness::Method>(j["method"], "sweep.method", [](const json& v) {
      if (!v.is_string()) throw InvalidArgument("sweep.method: expected strings");
      return with_context("sweep.method", [&] { return harness::parse_method(v.get<std::string>()); });
    });
  }
  return axes;
}

}  // namespace

data::SbmConfig parse_sbm(const json& j) {
  const std::string where = "dataset.sbm";
  reject_unknown(j, where, {"num_classes", "nodes_per_class", "p_in", "p_out", "feature_dim",
                            "class_center_scale", "noise_sigma", "seed"});
  data::SbmConfig c;
  c.num_classes = get_unsigned(j, where, "num_classes", c.num_classes);
  c.nodes_per_class = get_unsigned(j, where, "nodes_per_class", c.nodes_per_class);
  c.p_in = get_number(j, where, "p_in", c.p_in);
  c.p_out = get_number(j, where, "p_out", c.p_out);
  c.feature_dim = get_unsigned(j, where, "feature_dim", c.feature_dim);
  c.class_center_scale = get_number(j, where, "class_center_scale", c.class_center_scale);
  c.noise_sigma = get_number(j, where, "noise_sigma", c.noise_sigma);
  c.seed = get_unsigned(j, where, "seed", c.seed);
  with_context(where, [&] { c.validate(); });
  return c;
}

harness::RunConfig parse_run(const json& j) {
  const std::string where = "run";
  reject_unknown(j, where, {"method", "sampler", "budget", "beta", "lambda", "hps_scope", "classes_per_task",
                            "model", "solver", "seed"});
  harness::RunConfig r;
  r.method = with_context(where + ".method", [&] {
    return harness::parse_method(get_string(j, where, "method", std::string(harness::to_string(r.method))));
  });
  r.sampler = with_context(where + ".sampler", [&] {
    return harness::parse_sampler(get_string(j, where, "sampler", std::string(harness::to_string(r.sampler))));
  });
  r.hps_scope = with_context(where + ".hps_scope", [&] {
    return harness::parse_hps_scope(get_string(j, where, "hps_scope", std::string(harness::to_string(r.hps_scope))));
  });
  r.budget = get_unsigned(j, where, "budget", r.budget);
  r.beta = get_number(j, where, "beta", r.beta);
  r.lambda = get_number(j, where, "lambda", r.lambda);
  r.classes_per_task = get_unsigned(j, where, "classes_per_task", r.classes_per_task);
  if (j.contains("model")) r.model = parse_model(j["model"]);
  if (j.contains("solver")) r.solver = parse_solver(j["solver"]);
  r.seed = get_unsigned(j, where, "seed", r.seed);
  with_context(where, [&] { r.validate(); });
  return r;
}

ExperimentConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
  reject_unknown(doc, "config", {"dataset", "run", "sweep", "output_dir", "workers"});
  ExperimentConfig cfg;
  if (!doc.contains("dataset")) throw InvalidArgument("config.dataset: required");
  const json& ds = doc["dataset"];
  reject_unknown(ds, "dataset", {"sbm", "files"});
  if (ds.contains("sbm") == ds.contains("files")) {
    throw InvalidArgument("dataset: exactly one of 'sbm' or 'files' is required");
  }
  if (ds.contains("sbm")) cfg.dataset.sbm = parse_sbm(ds["sbm"]);
  if (ds.contains("files")) cfg.dataset.files = parse_files(ds["files"], base_dir);
  if (doc.contains("run")) cfg.run = parse_run(doc["run"]);
  if (doc.contains("sweep")) cfg.sweep = parse_sweep(doc["sweep"]);
  cfg.output_dir = get_string(doc, "config", "output_dir", "");
  cfg.workers = get_unsigned(doc, "config", "workers", cfg.workers);
  if (cfg.workers < 1) throw InvalidArgument("config.workers: must be >= 1");
  for (double b : cfg.sweep.beta) {
    if (!(b >= 0.0 && b <= 1.0)) throw InvalidArgument("sweep.beta: values must lie in [0, 1]");
  }
  for (const auto& r : expand_sweep(cfg)) with_context("sweep", [&] { r.validate(); });
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw InvalidArgument("cannot open config " + file.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(file.string(), 0, e.what());
  }
  return parse_config(doc, file.parent_path());
}

json to_json(const data::SbmConfig& c) {
  return {{"num_classes", c.num_classes},   {"nodes_per_class", c.nodes_per_class},
          {"p_in", c.p_in},                 {"p_out", c.p_out},
          {"feature_dim", c.feature_dim},   {"class_center_scale", c.class_center_scale},
          {"noise_sigma", c.noise_sigma},   {"seed", c.seed}};
}

json to_json(const harness::RunConfig& r) {
  json solver = {{"tolerance", r.solver.tolerance}};
  if (r.solver.max_iterations) solver["max_iterations"] = *r.solver.max_iterations;
  return {{"method", std::string(harness::to_string(r.method))},
          {"sampler", std::string(harness::to_string(r.sampler))},
          {"budget", r.budget},
          {"beta", r.beta},
          {"lambda", r.lambda},
          {"hps_scope", std::string(harness::to_string(r.hps_scope))},
          {"classes_per_task", r.classes_per_task},
          {"model",
           {{"hidden_dim", r.model.hidden_dim},
            {"learning_rate", r.model.learning_rate},
            {"epochs", r.model.epochs},
            {"backbone", std::string(gnn::to_string(r.model.backbone))}}},
          {"solver", solver},
          {"seed", r.seed}};
}

data::DatasetBundle materialize(const DatasetSource& source) {
  if (source.sbm) return data::preprocess(data::generate_sbm(*source.sbm));
  if (source.files) {
    return data::preprocess(data::load_dataset(source.files->edges, source.files->features, source.files->labels));
  }
  throw InvalidArgument("dataset source is empty");
}

std::vector<harness::RunConfig> expand_sweep(const ExperimentConfig& cfg) {
  const auto methods = cfg.sweep.method.empty() ? std::vector<harness::Method>{cfg.run.method} : cfg.sweep.method;
  const auto betas = cfg.sweep.beta.empty() ? std::vector<double>{cfg.run.beta} : cfg.sweep.beta;
  const auto seeds = cfg.sweep.seed.empty() ? std::vector<std::uint64_t>{cfg.run.seed} : cfg.sweep.seed;
  std::vector<harness::RunConfig> out;
  for (auto m : methods) {
    for (double b : betas) {
      for (auto s : seeds) {
        harness::RunConfig r = cfg.run;
        r.method = m;
        r.beta = b;
        r.seed = s;
        out.push_back(r);
      }
    }
  }
  return out;
}

std::string cell_name(const harness::RunConfig& cfg) {
  return "method=" + std::string(harness::to_string(cfg.method)) + "_beta=" + io::format_double(cfg.beta) +
         "_seed=" + std::to_string(cfg.seed);
}

}  // namespace ftfer::config
