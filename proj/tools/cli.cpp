#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ftfer/config.hpp"
#include "ftfer/data.hpp"
#include "ftfer/error.hpp"
#include "ftfer/harness.hpp"
#include "ftfer/hodge.hpp"
#include "ftfer/io.hpp"
#include "ftfer/report.hpp"

namespace ftfer::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int exit_code_for(const std::exception_ptr& e) {
  try {
    std::rethrow_exception(e);
  } catch (const SolverError&) {
    return kNumerical;
  } catch (const ConsistencyError&) {
    return kConsistency;
  } catch (...) {
    return kUsage;
  }
}

void require_fresh_dir(const fs::path& dir, bool force) {
  if (dir.empty()) throw InvalidArgument("no output directory given (config output_dir or --output)");
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) throw InvalidArgument(dir.string() + " exists and is not a directory");
    if (!fs::is_empty(dir) && !force) {
      throw InvalidArgument(dir.string() + " is not empty; pass --force to overwrite");
    }
  }
  fs::create_directories(dir);
}

void require_fresh_file(const fs::path& file, bool force) {
  if (fs::exists(file) && !force) throw InvalidArgument(file.string() + " exists; pass --force to overwrite");
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
}

std::string flow_csv(const hodge::EdgeFlow& f) {
  std::string out = "u,v,value\n";
  for (std::size_t e = 0; e < f.edges().size(); ++e) {
    const Edge& edge = f.edges()[e];
    out += std::to_string(edge.u) + "," + std::to_string(edge.v) + "," + io::format_double(f.values()[e]) + "\n";
  }
  return out;
}

// ---- gen ----

struct GenOptions {
  std::string config;
  std::string output;
  bool force = false;
};

int cmd_gen(const GenOptions& opt, std::ostream& out) {
  const json doc = json::parse(report::read_text(opt.config), nullptr, true);
  // gen accepts the experiment schema but only needs dataset.sbm and output_dir.
  const config::ExperimentConfig cfg = config::parse_config(doc, fs::path(opt.config).parent_path());
  if (!cfg.dataset.sbm) throw InvalidArgument("gen needs dataset.sbm");
  const fs::path dir = opt.output.empty() ? cfg.output_dir : fs::path(opt.output);
  require_fresh_dir(dir, opt.force);

  const data::DatasetBundle bundle = data::generate_sbm(*cfg.dataset.sbm);
  data::write_dataset(bundle, dir);
  const json manifest = {{"name", bundle.name},
                         {"generator", "sbm"},
                         {"sbm", config::to_json(*cfg.dataset.sbm)},
                         {"num_nodes", bundle.graph.num_nodes()},
                         {"num_edges", bundle.graph.num_edges()},
                         {"num_classes", bundle.num_classes()},
                         {"feature_dim", bundle.graph.feature_dim()},
                         {"files", {{"edges", "edges.tsv"}, {"features", "features.csv"}, {"labels", "labels.csv"}}}};
  report::write_text(dir / "manifest.json", manifest.dump(2) + "\n");
  out << "wrote " << bundle.graph.num_nodes() << " nodes, " << bundle.graph.num_edges() << " edges to "
      << dir.string() << "\n";
  return kOk;
}

// ---- hps ----

struct HpsOptions {
  std::string edges;
  std::string output;
  bool undirected = false;
  bool force = false;
  double tolerance = hodge::SolverConfig{}.tolerance;
};

int cmd_hps(const HpsOptions& opt, std::ostream& out) {
  const io::EdgeList list = io::read_edge_list(opt.edges);
  const Graph g = build_graph(list.edges, list.num_nodes, !opt.undirected);
  hodge::SolverConfig solver;
  solver.tolerance = opt.tolerance;
  const hodge::PotentialScores s = hodge::hodge_potential_score(g, solver);

  std::string text = "node_id,score\n";
  for (std::size_t v = 0; v < s.values.size(); ++v) text += std::to_string(v) + "," + io::format_double(s.values[v]) + "\n";
  if (opt.output.empty() || opt.output == "-") {
    out << text;
  } else {
    require_fresh_file(opt.output, opt.force);
    report::write_text(opt.output, text);
  }
  return kOk;
}

// ---- decompose ----

struct DecomposeOptions {
  std::string edges;
  std::string flow;
  std::string output;
  bool force = false;
};

int cmd_decompose(const DecomposeOptions& opt, std::ostream& out) {
  const io::EdgeList list = io::read_edge_list(opt.edges);
  const Graph g = build_graph(list.edges, list.num_nodes, false);
  hodge::EdgeFlow x(g);
  std::set<std::pair<NodeId, NodeId>> seen;
  for (const io::FlowEntry& f : io::read_flow_file(opt.flow)) {
    if (f.u >= g.num_nodes() || f.v >= g.num_nodes() || !g.has_edge(f.u, f.v)) {
      throw InvalidArgument("flow given on nonexistent edge (" + std::to_string(f.u) + "," + std::to_string(f.v) + ")");
    }
    if (!seen.insert({std::min(f.u, f.v), std::max(f.u, f.v)}).second) {
      throw InvalidArgument("flow given twice for edge (" + std::to_string(f.u) + "," + std::to_string(f.v) + ")");
    }
    x.set(f.u, f.v, f.value);
  }
  require_fresh_dir(opt.output, opt.force);
  const hodge::HodgeDecomposition d = hodge::decompose_edge_flow(g, x);

  const fs::path dir = opt.output;
  report::write_text(dir / "gradient.csv", flow_csv(d.gradient));
  report::write_text(dir / "curl.csv", flow_csv(d.curl));
  report::write_text(dir / "harmonic.csv", flow_csv(d.harmonic));

  const double total = x.norm();
  const double scale = std::max(total * total, 1e-300);
  double recon = 0.0;
  for (std::size_t e = 0; e < x.values().size(); ++e) {
    const double r = x.values()[e] - d.gradient.values()[e] - d.curl.values()[e] - d.harmonic.values()[e];
    recon += r * r;
  }
  const std::size_t components = connected_components(g).count;
  const double parts[3] = {d.gradient.norm(), d.curl.norm(), d.harmonic.norm()};
  const char* names[3] = {"gradient", "curl", "harmonic"};
  std::string dominant = "zero";
  if (total > 0.0) dominant = names[std::max_element(parts, parts + 3) - parts];

  const json rep = {
      {"num_nodes", g.num_nodes()},
      {"num_edges", g.num_edges()},
      {"num_triangles", hodge::enumerate_triangles(g).size()},
      {"cycle_rank", g.num_edges() + components - g.num_nodes()},
      {"flow_norm", total},
      {"norms", {{"gradient", parts[0]}, {"curl", parts[1]}, {"harmonic", parts[2]}}},
      {"energy_fraction",
       {{"gradient", parts[0] * parts[0] / scale},
        {"curl", parts[1] * parts[1] / scale},
        {"harmonic", parts[2] * parts[2] / scale}}},
      {"relative_inner_products",
       {{"gradient_curl", std::fabs(hodge::inner_product(d.gradient, d.curl)) / scale},
        {"gradient_harmonic", std::fabs(hodge::inner_product(d.gradient, d.harmonic)) / scale},
        {"curl_harmonic", std::fabs(hodge::inner_product(d.curl, d.harmonic)) / scale}}},
      {"relative_reconstruction_error", total > 0.0 ? std::sqrt(recon) / total : std::sqrt(recon)},
      {"dominant", dominant}};
  report::write_text(dir / "report.json", rep.dump(2) + "\n");
  out << "flow norm " << total << ": gradient " << parts[0] << ", curl " << parts[1] << ", harmonic " << parts[2]
      << "\n";
  return kOk;
}

// ---- run ----

struct RunOptions {
  std::string config;
  std::string output;
  std::size_t workers = 0;  // 0: from config
  bool force = false;
};

struct CellOutcome {
  std::optional<harness::RunResult> result;
  int code = kOk;
  std::string error;
};

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

std::string sweep_csv(const std::vector<harness::RunConfig>& cells, const std::vector<CellOutcome>& outcomes) {
  struct Group {
    harness::Method method;
    double beta;
    std::vector<double> aa, af;
    std::size_t failed = 0;
  };
  std::vector<Group> groups;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    auto it = std::find_if(groups.begin(), groups.end(), [&](const Group& g) {
      return g.method == cells[i].method && g.beta == cells[i].beta;
    });
    if (it == groups.end()) {
      groups.push_back(Group{cells[i].method, cells[i].beta, {}, {}, 0});
      it = groups.end() - 1;
    }
    if (!outcomes[i].result) {
      ++it->failed;
      continue;
    }
    it->aa.push_back(outcomes[i].result->average_accuracy);
    if (outcomes[i].result->average_forgetting) it->af.push_back(*outcomes[i].result->average_forgetting);
  }
  std::string text = "method,beta,n,aa_mean,aa_std,af_mean,af_std,failed\n";
  for (const Group& g : groups) {
    text += std::string(harness::to_string(g.method)) + "," + io::format_double(g.beta) + "," +
            std::to_string(g.aa.size()) + ",";
    text += g.aa.empty() ? std::string(",") : io::format_double(mean(g.aa)) + "," + io::format_double(sample_std(g.aa));
    text += ",";
    text += g.af.empty() ? std::string(",") : io::format_double(mean(g.af)) + "," + io::format_double(sample_std(g.af));
    text += "," + std::to_string(g.failed) + "\n";
  }
  return text;
}

int cmd_run(const RunOptions& opt, std::ostream& out, std::ostream& err) {
  const config::ExperimentConfig cfg = config::load_config(opt.config);
  const fs::path dir = opt.output.empty() ? cfg.output_dir : fs::path(opt.output);
  require_fresh_dir(dir, opt.force);

  const data::DatasetBundle dataset = config::materialize(cfg.dataset);
  const std::vector<harness::RunConfig> cells = config::expand_sweep(cfg);
  std::vector<CellOutcome> outcomes(cells.size());
  const std::size_t workers = std::min(opt.workers ? opt.workers : cfg.workers, cells.size());

  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      const fs::path cell_dir = dir / config::cell_name(cells[i]);
      CellOutcome& o = outcomes[i];
      try {
        o.result = harness::run(cells[i], dataset);
        report::write_run_dir(*o.result, dataset.name, cell_dir);
      } catch (const std::exception& e) {
        o.result.reset();
        o.code = exit_code_for(std::current_exception());
        o.error = e.what();
        fs::create_directories(cell_dir);
        report::write_text(cell_dir / "error.txt", o.error + "\n");
      }
      std::lock_guard lock(log_mutex);
      if (o.result) {
        out << config::cell_name(cells[i]) << "  AA " << o.result->average_accuracy << "\n";
      } else {
        err << config::cell_name(cells[i]) << "  failed: " << o.error << "\n";
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  report::write_text(dir / "sweep.csv", sweep_csv(cells, outcomes));
  int code = kOk;
  for (const auto& o : outcomes) code = std::max(code, o.code);
  return code;
}

// ---- report ----

int cmd_report(const std::string& run_dir, std::ostream& out) {
  const report::RunDirReport r = report::check_run_dir(run_dir);
  out << report::format_report(r);
  return kOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Continual graph learning with Hodge-potential experience replay"};
  app.require_subcommand(1);

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a stochastic block model dataset");
  gen_cmd->add_option("config", gen.config, "JSON config with dataset.sbm")->required()->check(CLI::ExistingFile);
  gen_cmd->add_option("-o,--output", gen.output, "Output directory (overrides output_dir)");
  gen_cmd->add_flag("--force", gen.force, "Overwrite a non-empty output directory");

  HpsOptions hps;
  auto* hps_cmd = app.add_subcommand("hps", "Hodge potential score of every node");
  hps_cmd->add_option("edges", hps.edges, "Edge list file")->required()->check(CLI::ExistingFile);
  hps_cmd->add_option("-o,--output", hps.output, "Output CSV (stdout when omitted)");
  hps_cmd->add_flag("--undirected", hps.undirected, "Treat every line as an undirected edge");
  hps_cmd->add_option("--tolerance", hps.tolerance, "Relative residual of the solver")->check(CLI::PositiveNumber);
  hps_cmd->add_flag("--force", hps.force, "Overwrite an existing output file");

  DecomposeOptions dec;
  auto* dec_cmd = app.add_subcommand("decompose", "Split an edge flow into gradient, curl and harmonic parts");
  dec_cmd->add_option("edges", dec.edges, "Edge list file")->required()->check(CLI::ExistingFile);
  dec_cmd->add_option("flow", dec.flow, "Flow file (u v value)")->required()->check(CLI::ExistingFile);
  dec_cmd->add_option("-o,--output", dec.output, "Output directory")->required();
  dec_cmd->add_flag("--force", dec.force, "Overwrite a non-empty output directory");

  RunOptions run;
  auto* run_cmd = app.add_subcommand("run", "Run continual-learning experiments from a JSON config");
  run_cmd->add_option("config", run.config, "Experiment config")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("-o,--output", run.output, "Output directory (overrides output_dir)");
  run_cmd->add_option("-j,--workers", run.workers, "Parallel sweep cells (overrides workers)");
  run_cmd->add_flag("--force", run.force, "Overwrite a non-empty output directory");

  std::string run_dir;
  auto* report_cmd = app.add_subcommand("report", "Check and print one run directory");
  report_cmd->add_option("run_dir", run_dir, "Directory with matrix.csv and summary.json")
      ->required()
      ->check(CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*gen_cmd) return cmd_gen(gen, out);
    if (*hps_cmd) return cmd_hps(hps, out);
    if (*dec_cmd) return cmd_decompose(dec, out);
    if (*run_cmd) return cmd_run(run, out, err);
    if (*report_cmd) return cmd_report(run_dir, out);
  } catch (const SolverError& e) {
    err << "error: " << e.what() << "\n";
    return kNumerical;
  } catch (const ConsistencyError& e) {
    err << "error: " << e.what() << "\n";
    return kConsistency;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

}  // namespace ftfer::cli
