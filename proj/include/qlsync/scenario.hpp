#pragma once

#include <atomic>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include <qlsync/errors.hpp>
#include <qlsync/graph.hpp>
#include <qlsync/kuramoto.hpp>
#include <qlsync/qlstate.hpp>
#include <qlsync/random.hpp>

namespace qlsync {

struct GraphConfig {
  int n0 = 8;
  int d = 5;
  double p_connect = 0.2;
  complexd connect_bias_a{1.0, 0.0};
  complexd connect_bias_b{1.0, 0.0};
};

struct DynamicsConfig {
  double coupling = 250.0; // K
  double sigma_nu = 1.0;
  double mean_freq = 100.0;
  PhaseInit init;          // uniform by default
  double periods = 80.0;
  int steps_per_period = 100;
  CouplingSign sign = CouplingSign::attractive;
};

struct EnsembleConfig {
  int preparations = 100; // M
  std::uint64_t base_seed = 20260811;
  bool graph_resample = false;
};

struct SamplingConfig {
  int n_samples = 40;
};

struct OutputConfig {
  std::string csv = "run.csv";
  std::string json = "run.json";
  bool svg = false;
  std::string svg_path = "run.svg";
};

struct ScenarioConfig {
  GraphConfig graph;
  DynamicsConfig dynamics;
  EnsembleConfig ensemble;
  SamplingConfig sampling;
  OutputConfig outputs;
  bool keep_preparations = false; // retain per-preparation states in the result

  long n_steps() const {
    return std::lround(dynamics.periods * dynamics.steps_per_period);
  }

  void validate() const {
    if (graph.n0 < 2) throw parameter_error("config: graph.n0 must be >= 2");
    if (graph.d <= 0 || graph.d >= graph.n0)
      throw parameter_error("config: graph.d must satisfy 0 < d < n0");
    if ((static_cast<long long>(graph.n0) * graph.d) % 2 != 0)
      throw parameter_error("config: graph.n0 * graph.d must be even");
    if (!(graph.p_connect >= 0.0 && graph.p_connect <= 1.0))
      throw parameter_error("config: graph.p_connect must lie in [0, 1]");
    if (std::abs(std::abs(graph.connect_bias_a) - 1.0) > 1e-12)
      throw parameter_error("config: graph.connect_bias_a must have unit modulus");
    if (std::abs(std::abs(graph.connect_bias_b) - 1.0) > 1e-12)
      throw parameter_error("config: graph.connect_bias_b must have unit modulus");
    if (!(dynamics.coupling >= 0.0)) throw parameter_error("config: dynamics.K must be >= 0");
    if (!(dynamics.sigma_nu >= 0.0))
      throw parameter_error("config: dynamics.sigma_nu must be >= 0");
    if (!(dynamics.mean_freq > 0.0))
      throw parameter_error("config: dynamics.mean_freq must be > 0");
    if (!(dynamics.periods > 0.0)) throw parameter_error("config: dynamics.periods must be > 0");
    if (dynamics.steps_per_period < 1)
      throw parameter_error("config: dynamics.steps_per_period must be >= 1");
    if (!dynamics.init.uniform && dynamics.init.circ_std < 0.0)
      throw parameter_error("config: dynamics.init.circ_std must be >= 0");
    if (ensemble.preparations < 1) throw parameter_error("config: ensemble.M must be >= 1");
    if (sampling.n_samples < 2) throw parameter_error("config: sampling.n_samples must be >= 2");
    if (sampling.n_samples > n_steps() + 1)
      throw parameter_error("config: sampling.n_samples exceeds the number of steps");
  }

  nlohmann::json to_json() const;
  static ScenarioConfig from_json(const nlohmann::json& j);
};

namespace detail {

inline void reject_unknown(const nlohmann::json& j, const char* section,
                           std::initializer_list<const char*> known) {
  if (!j.is_object())
    throw parameter_error(std::string("config: section '") + section + "' must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool found = false;
    for (const char* k : known)
      if (it.key() == k) {
        found = true;
        break;
      }
    if (!found)
      throw parameter_error(std::string("config: unknown field '") + section + "." + it.key() +
                            "'");
  }
}

template <typename T>
void get_field(const nlohmann::json& j, const char* section, const char* name, T& out) {
  if (!j.contains(name)) return;
  try {
    out = j.at(name).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw parameter_error(std::string("config: field '") + section + "." + name +
                          "' has the wrong type");
  }
}

inline void get_complex(const nlohmann::json& j, const char* section, const char* name,
                        complexd& out) {
  if (!j.contains(name)) return;
  const auto& v = j.at(name);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    throw parameter_error(std::string("config: field '") + section + "." + name +
                          "' must be [re, im]");
  out = complexd{v[0].get<double>(), v[1].get<double>()};
}

inline std::string sign_name(CouplingSign s) {
  return s == CouplingSign::attractive ? "attractive" : "paper_literal";
}

inline CouplingSign sign_from_name(const std::string& name) {
  if (name == "attractive") return CouplingSign::attractive;
  if (name == "paper_literal") return CouplingSign::paper_literal;
  throw parameter_error("config: dynamics.coupling_sign must be 'attractive' or 'paper_literal'");
}

} // namespace detail

inline nlohmann::json ScenarioConfig::to_json() const {
  return {
      {"graph",
       {{"n0", graph.n0},
        {"d", graph.d},
        {"p_connect", graph.p_connect},
        {"connect_bias_a", {graph.connect_bias_a.real(), graph.connect_bias_a.imag()}},
        {"connect_bias_b", {graph.connect_bias_b.real(), graph.connect_bias_b.imag()}}}},
      {"dynamics",
       {{"K", dynamics.coupling},
        {"sigma_nu", dynamics.sigma_nu},
        {"mean_freq", dynamics.mean_freq},
        {"init",
         {{"uniform", dynamics.init.uniform},
          {"circ_std", dynamics.init.circ_std},
          {"mu", dynamics.init.mu}}},
        {"periods", dynamics.periods},
        {"steps_per_period", dynamics.steps_per_period},
        {"coupling_sign", detail::sign_name(dynamics.sign)}}},
      {"ensemble",
       {{"M", ensemble.preparations},
        {"base_seed", ensemble.base_seed},
        {"graph_resample", ensemble.graph_resample}}},
      {"sampling", {{"n_samples", sampling.n_samples}}},
      {"outputs",
       {{"csv", outputs.csv},
        {"json", outputs.json},
        {"svg", outputs.svg},
        {"svg_path", outputs.svg_path}}},
      {"keep_preparations", keep_preparations},
  };
}

inline ScenarioConfig ScenarioConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw parameter_error("config: top level must be a JSON object");
  detail::reject_unknown(j, "",
                         {"graph", "dynamics", "ensemble", "sampling", "outputs",
                          "keep_preparations"});
  ScenarioConfig cfg;
  if (j.contains("graph")) {
    const auto& g = j.at("graph");
    detail::reject_unknown(g, "graph", {"n0", "d", "p_connect", "connect_bias_a",
                                        "connect_bias_b"});
    detail::get_field(g, "graph", "n0", cfg.graph.n0);
    detail::get_field(g, "graph", "d", cfg.graph.d);
    detail::get_field(g, "graph", "p_connect", cfg.graph.p_connect);
    detail::get_complex(g, "graph", "connect_bias_a", cfg.graph.connect_bias_a);
    detail::get_complex(g, "graph", "connect_bias_b", cfg.graph.connect_bias_b);
  }
  if (j.contains("dynamics")) {
    const auto& d = j.at("dynamics");
    detail::reject_unknown(d, "dynamics",
                           {"K", "sigma_nu", "mean_freq", "init", "periods",
                            "steps_per_period", "coupling_sign"});
    detail::get_field(d, "dynamics", "K", cfg.dynamics.coupling);
    detail::get_field(d, "dynamics", "sigma_nu", cfg.dynamics.sigma_nu);
    detail::get_field(d, "dynamics", "mean_freq", cfg.dynamics.mean_freq);
    detail::get_field(d, "dynamics", "periods", cfg.dynamics.periods);
    detail::get_field(d, "dynamics", "steps_per_period", cfg.dynamics.steps_per_period);
    if (d.contains("coupling_sign")) {
      std::string name;
      detail::get_field(d, "dynamics", "coupling_sign", name);
      cfg.dynamics.sign = detail::sign_from_name(name);
    }
    if (d.contains("init")) {
      const auto& init = d.at("init");
      detail::reject_unknown(init, "dynamics.init", {"uniform", "circ_std", "mu"});
      if (init.contains("circ_std") && !init.contains("uniform"))
        cfg.dynamics.init.uniform = false;
      detail::get_field(init, "dynamics.init", "uniform", cfg.dynamics.init.uniform);
      detail::get_field(init, "dynamics.init", "circ_std", cfg.dynamics.init.circ_std);
      detail::get_field(init, "dynamics.init", "mu", cfg.dynamics.init.mu);
    }
  }
  if (j.contains("ensemble")) {
    const auto& e = j.at("ensemble");
    detail::reject_unknown(e, "ensemble", {"M", "base_seed", "graph_resample"});
    detail::get_field(e, "ensemble", "M", cfg.ensemble.preparations);
    detail::get_field(e, "ensemble", "base_seed", cfg.ensemble.base_seed);
    detail::get_field(e, "ensemble", "graph_resample", cfg.ensemble.graph_resample);
  }
  if (j.contains("sampling")) {
    const auto& s = j.at("sampling");
    detail::reject_unknown(s, "sampling", {"n_samples"});
    detail::get_field(s, "sampling", "n_samples", cfg.sampling.n_samples);
  }
  if (j.contains("outputs")) {
    const auto& o = j.at("outputs");
    detail::reject_unknown(o, "outputs", {"csv", "json", "svg", "svg_path"});
    detail::get_field(o, "outputs", "csv", cfg.outputs.csv);
    detail::get_field(o, "outputs", "json", cfg.outputs.json);
    detail::get_field(o, "outputs", "svg", cfg.outputs.svg);
    detail::get_field(o, "outputs", "svg_path", cfg.outputs.svg_path);
  }
  detail::get_field(j, "", "keep_preparations", cfg.keep_preparations);
  return cfg;
}

/// One ensemble-averaged sample: time in mean periods, order parameter,
/// purity and the 4x4 density matrix, plus the mean projection residual.
struct RunRecord {
  double t = 0.0;
  double order_re = 0.0;
  double order_mod = 0.0;
  double purity = 0.0;
  DensityMatrix rho;
  double residual_mean = 0.0;
};

struct ScenarioResult {
  std::vector<RunRecord> records;
  nlohmann::json resolved_config;
  std::vector<std::string> warnings;
  // [preparation][sample]; filled only when keep_preparations is set
  std::vector<std::vector<EffectiveState>> preparations;
};

/// Two QL bits (a and b) built from d-regular random subgraphs, combined
/// by the Cartesian product into the 4-block composite graph.
inline BiasedGraph build_scenario_graph(const GraphConfig& gc, std::uint64_t seed) {
  const BiasedGraph a1 = gen_d_regular_random(gc.n0, gc.d, mix_seed(seed + 0), "a1");
  const BiasedGraph a2 = gen_d_regular_random(gc.n0, gc.d, mix_seed(seed + 1), "a2");
  const BiasedGraph b1 = gen_d_regular_random(gc.n0, gc.d, mix_seed(seed + 3), "b1");
  const BiasedGraph b2 = gen_d_regular_random(gc.n0, gc.d, mix_seed(seed + 4), "b2");
  const BiasedGraph bit_a =
      connect_subgraphs(a1, a2, gc.p_connect, gc.connect_bias_a, mix_seed(seed + 2));
  const BiasedGraph bit_b =
      connect_subgraphs(b1, b2, gc.p_connect, gc.connect_bias_b, mix_seed(seed + 5));
  return cartesian_product(bit_a, bit_b);
}

namespace detail {

struct PrepRow {
  std::vector<EffectiveState> states; // one per sample time
  std::vector<double> order_re;
  std::vector<double> order_mod;
};

[[noreturn]] inline void rethrow_with_realization(int realization, std::exception_ptr ep) {
  try {
    std::rethrow_exception(ep);
  } catch (const parameter_error& e) {
    throw parameter_error("realization " + std::to_string(realization) + ": " + e.what());
  } catch (const contract_error& e) {
    throw contract_error("realization " + std::to_string(realization) + ": " + e.what());
  } catch (const numeric_error& e) {
    throw numeric_error("realization " + std::to_string(realization) + ": " + e.what());
  } catch (const io_error& e) {
    throw io_error("realization " + std::to_string(realization) + ": " + e.what());
  }
}

} // namespace detail

/// Runs M preparations of the configured scenario and reduces them into
/// per-sample ensemble records. Fully deterministic for a given config and
/// base seed: realization r always uses seed base_seed + r, and the
/// reduction runs in realization order whatever the worker count.
inline ScenarioResult run_scenario(const ScenarioConfig& cfg, int workers = 0) {
  cfg.validate();
  ScenarioResult result;
  result.resolved_config = cfg.to_json();

  const int n0 = cfg.graph.n0;
  const int n_total = 4 * n0 * n0;
  const double period = 2.0 * pi / cfg.dynamics.mean_freq;
  const double dt = period / cfg.dynamics.steps_per_period;
  const long n_steps = cfg.n_steps();
  const int n_samples = cfg.sampling.n_samples;
  const int m = cfg.ensemble.preparations;

  std::vector<long> sample_steps(n_samples);
  for (int s = 0; s < n_samples; ++s)
    sample_steps[s] = std::lround(static_cast<double>(s) * n_steps / (n_samples - 1));

  OscillatorParams params;
  params.coupling = cfg.dynamics.coupling;
  params.sigma_nu = cfg.dynamics.sigma_nu;
  params.mean_freq = cfg.dynamics.mean_freq;
  params.sign = cfg.dynamics.sign;

  // Shared graph and reference emergent state unless resampling per prep.
  BiasedGraph shared_graph;
  EmergentState shared_ref;
  EffectiveBasis shared_basis;
  if (!cfg.ensemble.graph_resample) {
    shared_graph = build_scenario_graph(
        cfg.graph, derive_seed(cfg.ensemble.base_seed, SeedStream::graph));
    shared_ref = emergent_eigenvector(shared_graph.adjacency);
    shared_basis = EffectiveBasis::from_graph(shared_graph);
    if (shared_ref.degenerate)
      result.warnings.push_back("emergent state is degenerate (spectral gap " +
                                std::to_string(shared_ref.gap) + ")");
  }

  std::vector<detail::PrepRow> rows(m);
  std::atomic<int> next{0};
  std::mutex error_mutex;
  int error_realization = -1;
  std::exception_ptr error;

  auto run_one = [&](int r) {
    const std::uint64_t seed_r = cfg.ensemble.base_seed + static_cast<std::uint64_t>(r);
    const BiasedGraph* graph = &shared_graph;
    const Eigen::VectorXcd* v0 = &shared_ref.vector;
    const EffectiveBasis* basis = &shared_basis;
    BiasedGraph local_graph;
    EmergentState local_ref;
    EffectiveBasis local_basis;
    if (cfg.ensemble.graph_resample) {
      local_graph = build_scenario_graph(cfg.graph, derive_seed(seed_r, SeedStream::graph));
      local_ref = emergent_eigenvector(local_graph.adjacency);
      local_basis = EffectiveBasis::from_graph(local_graph);
      graph = &local_graph;
      v0 = &local_ref.vector;
      basis = &local_basis;
    }

    const Eigen::VectorXd eps = sample_frequencies(
        n_total, cfg.dynamics.sigma_nu, derive_seed(seed_r, SeedStream::frequencies));
    const Eigen::VectorXd phi0 = sample_initial_phases(
        n_total, cfg.dynamics.init, derive_seed(seed_r, SeedStream::phases));

    detail::PrepRow& row = rows[r];
    row.states.reserve(n_samples);
    row.order_re.reserve(n_samples);
    row.order_mod.reserve(n_samples);
    integrate(PhaseState(phi0, eps), params, *graph, dt, n_steps, sample_steps,
              [&](double t, const Eigen::VectorXd& theta) {
                const OrderParameter op = order_parameter(theta);
                row.order_re.push_back(op.re);
                row.order_mod.push_back(op.modulus);
                row.states.push_back(project_phase_modulated(theta, *v0, *basis, t));
              });
  };

  int n_workers = workers > 0 ? workers
                              : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  n_workers = std::min(n_workers, m);
  if (n_workers <= 1) {
    for (int r = 0; r < m; ++r) {
      try {
        run_one(r);
      } catch (...) {
        detail::rethrow_with_realization(r, std::current_exception());
      }
    }
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (int w = 0; w < n_workers; ++w)
      pool.emplace_back([&] {
        for (;;) {
          const int r = next.fetch_add(1);
          if (r >= m) return;
          {
            std::lock_guard<std::mutex> lk(error_mutex);
            if (error) return;
          }
          try {
            run_one(r);
          } catch (...) {
            std::lock_guard<std::mutex> lk(error_mutex);
            if (!error || r < error_realization) {
              error = std::current_exception();
              error_realization = r;
            }
          }
        }
      });
    for (auto& th : pool) th.join();
    if (error) detail::rethrow_with_realization(error_realization, error);
  }

  // Deterministic reduction in realization order.
  result.records.resize(n_samples);
  std::vector<EffectiveState> column(m);
  for (int s = 0; s < n_samples; ++s) {
    double ord_re = 0.0, ord_mod = 0.0, residual = 0.0;
    for (int r = 0; r < m; ++r) {
      column[r] = rows[r].states[s];
      ord_re += rows[r].order_re[s];
      ord_mod += rows[r].order_mod[s];
      residual += rows[r].states[s].residual;
    }
    RunRecord& rec = result.records[s];
    rec.t = static_cast<double>(sample_steps[s]) / cfg.dynamics.steps_per_period;
    rec.order_re = ord_re / m;
    rec.order_mod = ord_mod / m;
    rec.residual_mean = residual / m;
    rec.rho = accumulate_density(column);
    rec.purity = purity(rec.rho);
  }

  if (cfg.keep_preparations) {
    result.preparations.resize(m);
    for (int r = 0; r < m; ++r) result.preparations[r] = std::move(rows[r].states);
  }
  return result;
}

struct CouplingSummary {
  double coupling = 0.0;
  double final_order_mod = 0.0;
  double final_purity = 0.0;
};

inline std::vector<CouplingSummary> sweep_coupling(const ScenarioConfig& base,
                                                   std::span<const double> couplings,
                                                   int workers = 0) {
  if (couplings.empty())
    throw parameter_error("sweep_coupling: coupling list must be non-empty");
  std::vector<CouplingSummary> out;
  for (double k : couplings) {
    ScenarioConfig cfg = base;
    cfg.dynamics.coupling = k;
    const ScenarioResult res = run_scenario(cfg, workers);
    out.push_back({k, res.records.back().order_mod, res.records.back().purity});
  }
  return out;
}

namespace detail {

inline std::string fmt12(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

} // namespace detail

/// CSV with the fixed header
/// t,order_re,order_mod,purity,rho00,rho11,rho22,rho33,abs01,abs02,abs03,abs12,abs13,abs23,residual
/// and values at 12 significant digits, rows in time order.
inline void emit_csv(std::span<const RunRecord> records, const std::filesystem::path& path) {
  if (records.empty()) throw parameter_error("emit_csv: records must be non-empty");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("emit_csv: cannot open '" + path.string() + "'");
  out << "t,order_re,order_mod,purity,rho00,rho11,rho22,rho33,"
         "abs01,abs02,abs03,abs12,abs13,abs23,residual\n";
  for (const auto& r : records) {
    const auto& rho = r.rho.rho;
    out << detail::fmt12(r.t) << ',' << detail::fmt12(r.order_re) << ','
        << detail::fmt12(r.order_mod) << ',' << detail::fmt12(r.purity);
    for (int m = 0; m < 4; ++m) out << ',' << detail::fmt12(rho(m, m).real());
    for (const auto& [m, n] : OffdiagSeries::pairs)
      out << ',' << detail::fmt12(std::abs(rho(m, n)));
    out << ',' << detail::fmt12(r.residual_mean) << '\n';
  }
  out.flush();
  if (!out) throw io_error("emit_csv: write to '" + path.string() + "' failed");
}

inline void emit_sweep_csv(std::span<const CouplingSummary> summary,
                           const std::filesystem::path& path) {
  if (summary.empty()) throw parameter_error("emit_sweep_csv: summary must be non-empty");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("emit_sweep_csv: cannot open '" + path.string() + "'");
  out << "K,final_order_mod,final_purity\n";
  for (const auto& s : summary)
    out << detail::fmt12(s.coupling) << ',' << detail::fmt12(s.final_order_mod) << ','
        << detail::fmt12(s.final_purity) << '\n';
  out.flush();
  if (!out) throw io_error("emit_sweep_csv: write to '" + path.string() + "' failed");
}

inline nlohmann::json density_to_json(const DensityMatrix& d) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < d.rho.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < d.rho.cols(); ++j)
      row.push_back({d.rho(i, j).real(), d.rho(i, j).imag()});
    rows.push_back(row);
  }
  return rows;
}

/// JSON artifact embedding the fully resolved config so a run is
/// reproducible from its output alone.
inline nlohmann::json result_to_json(const ScenarioResult& result) {
  nlohmann::json records = nlohmann::json::array();
  for (const auto& r : result.records)
    records.push_back({{"t", r.t},
                       {"order_re", r.order_re},
                       {"order_mod", r.order_mod},
                       {"purity", r.purity},
                       {"residual_mean", r.residual_mean},
                       {"rho", density_to_json(r.rho)}});
  return {{"config", result.resolved_config},
          {"warnings", result.warnings},
          {"records", records}};
}

inline void emit_json(const ScenarioResult& result, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("emit_json: cannot open '" + path.string() + "'");
  out << result_to_json(result).dump(2) << '\n';
  out.flush();
  if (!out) throw io_error("emit_json: write to '" + path.string() + "' failed");
}

/// Standalone SVG with one polyline per series: order_re, purity and the
/// six |rho_mn| magnitudes, axes in mean-period units.
inline void emit_svg(std::span<const RunRecord> records, const std::filesystem::path& path) {
  if (records.empty()) throw parameter_error("emit_svg: records must be non-empty");

  constexpr double width = 960, height = 540;
  constexpr double left = 70, right = 790, top = 30, bottom = 490;

  const double t0 = records.front().t, t1 = records.back().t;
  const double t_span = t1 > t0 ? t1 - t0 : 1.0;

  std::vector<std::pair<std::string, std::vector<double>>> series;
  series.emplace_back("order_re", std::vector<double>{});
  series.emplace_back("purity", std::vector<double>{});
  for (const auto& [m, n] : OffdiagSeries::pairs)
    series.emplace_back("|rho" + std::to_string(m) + std::to_string(n) + "|",
                        std::vector<double>{});
  for (const auto& r : records) {
    series[0].second.push_back(r.order_re);
    series[1].second.push_back(r.purity);
    for (std::size_t k = 0; k < OffdiagSeries::pairs.size(); ++k) {
      const auto [m, n] = OffdiagSeries::pairs[k];
      series[2 + k].second.push_back(std::abs(r.rho.rho(m, n)));
    }
  }
  double y_min = 0.0, y_max = 1.0;
  for (const auto& [name, values] : series)
    for (double v : values) {
      y_min = std::min(y_min, v);
      y_max = std::max(y_max, v);
    }
  const double y_span = y_max - y_min;

  auto sx = [&](double t) { return left + (t - t0) / t_span * (right - left); };
  auto sy = [&](double v) { return bottom - (v - y_min) / y_span * (bottom - top); };

  static const char* colors[8] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("emit_svg: cannot open '" + path.string() + "'");
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n"
      << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
  // axes and ticks
  out << "<line x1=\"" << left << "\" y1=\"" << bottom << "\" x2=\"" << right << "\" y2=\""
      << bottom << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << bottom
      << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double tv = t0 + t_span * k / 5.0;
    const double vv = y_min + y_span * k / 5.0;
    out << "<line x1=\"" << sx(tv) << "\" y1=\"" << bottom << "\" x2=\"" << sx(tv) << "\" y2=\""
        << bottom + 6 << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << sx(tv) << "\" y=\"" << bottom + 22
        << "\" font-size=\"12\" text-anchor=\"middle\">" << detail::fmt12(tv) << "</text>\n"
        << "<line x1=\"" << left - 6 << "\" y1=\"" << sy(vv) << "\" x2=\"" << left << "\" y2=\""
        << sy(vv) << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << left - 10 << "\" y=\"" << sy(vv) + 4
        << "\" font-size=\"12\" text-anchor=\"end\">" << detail::fmt12(vv) << "</text>\n";
  }
  out << "<text x=\"" << (left + right) / 2 << "\" y=\"" << bottom + 45
      << "\" font-size=\"14\" text-anchor=\"middle\">t (mean periods)</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    out << "<polyline fill=\"none\" stroke=\"" << colors[k % 8] << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t s = 0; s < records.size(); ++s)
      out << sx(records[s].t) << ',' << sy(series[k].second[s]) << ' ';
    out << "\"/>\n";
    const double ly = top + 18.0 * static_cast<double>(k);
    out << "<rect x=\"" << right + 15 << "\" y=\"" << ly << "\" width=\"12\" height=\"12\" fill=\""
        << colors[k % 8] << "\"/>\n"
        << "<text x=\"" << right + 32 << "\" y=\"" << ly + 10 << "\" font-size=\"12\">"
        << series[k].first << "</text>\n";
  }
  out << "</svg>\n";
  out.flush();
  if (!out) throw io_error("emit_svg: write to '" + path.string() + "' failed");
}

} // namespace qlsync
