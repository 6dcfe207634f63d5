// qlsync: config-driven experiment runner for quantum-like state dynamics
// on synchronizing oscillator networks.
//
// Exit codes: 0 success, 2 configuration/usage error, 3 numeric error,
// 4 I/O error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <qlsync/errors.hpp>
#include <qlsync/graph.hpp>
#include <qlsync/lohe.hpp>
#include <qlsync/scenario.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json load_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw qlsync::io_error("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw qlsync::parameter_error("invalid JSON in '" + path + "': " + e.what());
  }
}

void apply_seed_env(qlsync::ScenarioConfig& cfg) {
  const char* env = std::getenv("QLSYNC_SEED");
  if (!env) return;
  try {
    std::size_t pos = 0;
    const unsigned long long value = std::stoull(env, &pos);
    if (pos != std::string(env).size()) throw std::invalid_argument("trailing characters");
    cfg.ensemble.base_seed = value;
  } catch (const std::exception&) {
    throw qlsync::parameter_error(std::string("QLSYNC_SEED is not a valid seed: '") + env + "'");
  }
}

fs::path resolve_out(const std::string& out_dir, const std::string& file) {
  if (out_dir.empty()) return file;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw qlsync::io_error("cannot create output directory '" + out_dir + "'");
  return fs::path(out_dir) / fs::path(file).filename();
}

int cmd_run(const std::string& config_path, const std::string& out_dir, bool force_svg,
            int workers) {
  qlsync::ScenarioConfig cfg = qlsync::ScenarioConfig::from_json(load_json(config_path));
  apply_seed_env(cfg);
  if (force_svg) cfg.outputs.svg = true;
  const qlsync::ScenarioResult result = qlsync::run_scenario(cfg, workers);
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";

  const fs::path csv = resolve_out(out_dir, cfg.outputs.csv);
  const fs::path js = resolve_out(out_dir, cfg.outputs.json);
  qlsync::emit_csv(result.records, csv);
  qlsync::emit_json(result, js);
  std::cout << "wrote " << csv.string() << "\n" << "wrote " << js.string() << "\n";
  if (cfg.outputs.svg) {
    const fs::path svg = resolve_out(out_dir, cfg.outputs.svg_path);
    qlsync::emit_svg(result.records, svg);
    std::cout << "wrote " << svg.string() << "\n";
  }
  const auto& last = result.records.back();
  std::cout << "final: t=" << last.t << " order_re=" << last.order_re
            << " order_mod=" << last.order_mod << " purity=" << last.purity << "\n";
  return 0;
}

std::vector<double> parse_coupling_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      out.push_back(std::stod(item, &pos));
      if (pos != item.size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw qlsync::parameter_error("--K: '" + item + "' is not a number");
    }
  }
  if (out.empty()) throw qlsync::parameter_error("--K: empty coupling list");
  return out;
}

int cmd_sweep(const std::string& config_path, const std::string& k_list,
              const std::string& out_dir, int workers) {
  qlsync::ScenarioConfig cfg = qlsync::ScenarioConfig::from_json(load_json(config_path));
  apply_seed_env(cfg);
  const auto couplings = parse_coupling_list(k_list);
  const auto summary = qlsync::sweep_coupling(cfg, couplings, workers);
  const fs::path path = resolve_out(out_dir, "sweep.csv");
  qlsync::emit_sweep_csv(summary, path);
  std::cout << "K,final_order_mod,final_purity\n";
  for (const auto& s : summary)
    std::cout << s.coupling << ',' << s.final_order_mod << ',' << s.final_purity << "\n";
  std::cout << "wrote " << path.string() << "\n";
  return 0;
}

int cmd_graph(const std::string& spec_path, bool dump) {
  const json spec = load_json(spec_path);
  qlsync::BiasedGraph graph;
  if (spec.contains("edges")) {
    graph = qlsync::graph_from_json(spec);
  } else {
    qlsync::GraphConfig gc;
    std::uint64_t seed = 20260811;
    qlsync::detail::reject_unknown(spec, "graph",
                                   {"n0", "d", "p_connect", "connect_bias_a",
                                    "connect_bias_b", "seed"});
    qlsync::detail::get_field(spec, "graph", "n0", gc.n0);
    qlsync::detail::get_field(spec, "graph", "d", gc.d);
    qlsync::detail::get_field(spec, "graph", "p_connect", gc.p_connect);
    qlsync::detail::get_complex(spec, "graph", "connect_bias_a", gc.connect_bias_a);
    qlsync::detail::get_complex(spec, "graph", "connect_bias_b", gc.connect_bias_b);
    qlsync::detail::get_field(spec, "graph", "seed", seed);
    graph = qlsync::build_scenario_graph(gc, seed);
  }

  json out;
  out["n"] = graph.n;
  if (dump) {
    const qlsync::Spectrum s = qlsync::spectrum(graph);
    json eigenvalues = json::array();
    for (Eigen::Index i = 0; i < s.eigenvalues.size(); ++i)
      eigenvalues.push_back(s.eigenvalues(i));
    out["eigenvalues"] = eigenvalues;
    out["top_eigenvalue"] = s.eigenvalues(graph.n - 1);
    out["spectral_gap"] = qlsync::spectral_gap(s);
    out["graph"] = qlsync::graph_to_json(graph);
  } else {
    const qlsync::EmergentState top = qlsync::emergent_eigenvector(graph.adjacency);
    out["top_eigenvalue"] = top.eigenvalue;
    out["spectral_gap"] = top.gap;
    out["degenerate"] = top.degenerate;
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

qlsync::LoheEmulationConfig lohe_config_from_json(const json& j) {
  qlsync::LoheEmulationConfig cfg;
  qlsync::detail::reject_unknown(
      j, "lohe",
      {"n_bits", "n0", "d", "p_intra", "p_inter", "inter_weight", "K", "lohe_K", "sigma_nu",
       "mean_freq", "periods", "steps_per_period", "n_samples", "base_seed"});
  qlsync::detail::get_field(j, "lohe", "n_bits", cfg.n_bits);
  qlsync::detail::get_field(j, "lohe", "n0", cfg.n0);
  qlsync::detail::get_field(j, "lohe", "d", cfg.d);
  qlsync::detail::get_field(j, "lohe", "p_intra", cfg.p_intra);
  qlsync::detail::get_field(j, "lohe", "p_inter", cfg.p_inter);
  qlsync::detail::get_field(j, "lohe", "inter_weight", cfg.inter_weight);
  qlsync::detail::get_field(j, "lohe", "K", cfg.coupling);
  qlsync::detail::get_field(j, "lohe", "lohe_K", cfg.lohe_coupling);
  qlsync::detail::get_field(j, "lohe", "sigma_nu", cfg.sigma_nu);
  qlsync::detail::get_field(j, "lohe", "mean_freq", cfg.mean_freq);
  qlsync::detail::get_field(j, "lohe", "periods", cfg.periods);
  qlsync::detail::get_field(j, "lohe", "steps_per_period", cfg.steps_per_period);
  qlsync::detail::get_field(j, "lohe", "n_samples", cfg.n_samples);
  qlsync::detail::get_field(j, "lohe", "base_seed", cfg.base_seed);
  return cfg;
}

int cmd_lohe(const std::string& config_path, const std::string& out_path) {
  const qlsync::LoheEmulationConfig cfg = lohe_config_from_json(load_json(config_path));
  const qlsync::LoheComparison cmp = qlsync::run_lohe_emulation(cfg);
  for (const auto& w : cmp.warnings) std::cerr << "warning: " << w << "\n";
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw qlsync::io_error("cannot open '" + out_path + "'");
  out << "t,network_sync,lohe_sync\n";
  for (std::size_t s = 0; s < cmp.t.size(); ++s)
    out << qlsync::detail::fmt12(cmp.t[s]) << ',' << qlsync::detail::fmt12(cmp.network_metric[s])
        << ',' << qlsync::detail::fmt12(cmp.lohe_metric[s]) << '\n';
  out.flush();
  if (!out) throw qlsync::io_error("write to '" + out_path + "' failed");
  std::cout << "wrote " << out_path << "\n"
            << "final: network_sync=" << cmp.network_metric.back()
            << " lohe_sync=" << cmp.lohe_metric.back() << "\n";
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"quantum-like state dynamics on synchronizing oscillator networks"};
  app.require_subcommand(1);

  std::string config_path, out_dir, spec_path, k_list;
  std::string lohe_out = "lohe.csv";
  bool svg = false, dump = false;
  int workers = 0;

  auto* run = app.add_subcommand("run", "run a scenario from a JSON config");
  run->add_option("--config", config_path, "scenario config file")->required();
  run->add_option("--out-dir", out_dir, "directory for output files");
  run->add_flag("--svg", svg, "also write the SVG plot");
  run->add_option("--workers", workers, "worker thread count (0 = hardware)");

  auto* sweep = app.add_subcommand("sweep", "run the scenario for several couplings");
  sweep->add_option("--config", config_path, "scenario config file")->required();
  sweep->add_option("--K", k_list, "comma-separated coupling values")->required();
  sweep->add_option("--out-dir", out_dir, "directory for output files");
  sweep->add_option("--workers", workers, "worker thread count (0 = hardware)");

  auto* graph = app.add_subcommand("graph", "build a graph and report its spectrum");
  graph->add_option("--spec", spec_path, "graph config or serialized graph JSON")->required();
  graph->add_flag("--dump", dump, "print full eigenvalues and graph JSON");

  auto* lohe = app.add_subcommand("lohe", "run the QL-bit emulation comparison");
  lohe->add_option("--config", config_path, "emulation config file")->required();
  lohe->add_option("--out", lohe_out, "comparison CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (run->parsed()) return cmd_run(config_path, out_dir, svg, workers);
    if (sweep->parsed()) return cmd_sweep(config_path, k_list, out_dir, workers);
    if (graph->parsed()) return cmd_graph(spec_path, dump);
    if (lohe->parsed()) return cmd_lohe(config_path, lohe_out);
  } catch (const qlsync::parameter_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const qlsync::contract_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const qlsync::numeric_error& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const qlsync::io_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
