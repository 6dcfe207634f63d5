#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include <qlsync/errors.hpp>
#include <qlsync/graph.hpp>
#include <qlsync/kuramoto.hpp>
#include <qlsync/qlstate.hpp>
#include <qlsync/random.hpp>

namespace qlsync {

/// The three 4x4 skew-symmetric generators. They form a quaternionic
/// triple: L_k^2 = -I and they pairwise anticommute, so
/// exp(t w.L) = cos(|w|t) I + sin(|w|t) (w.L)/|w|.
inline const Eigen::Matrix4d& lohe_generator(int k) {
  static const Eigen::Matrix4d l1 = (Eigen::Matrix4d() <<  //
                                     0, 0, 0, -1,          //
                                     0, 0, -1, 0,          //
                                     0, 1, 0, 0,           //
                                     1, 0, 0, 0)
                                        .finished();
  static const Eigen::Matrix4d l2 = (Eigen::Matrix4d() <<  //
                                     0, 0, 1, 0,           //
                                     0, 0, 0, -1,          //
                                     -1, 0, 0, 0,          //
                                     0, 1, 0, 0)
                                        .finished();
  static const Eigen::Matrix4d l3 = (Eigen::Matrix4d() <<  //
                                     0, -1, 0, 0,          //
                                     1, 0, 0, 0,           //
                                     0, 0, 0, -1,          //
                                     0, 0, 1, 0)
                                        .finished();
  switch (k) {
    case 1: return l1;
    case 2: return l2;
    case 3: return l3;
    default: throw parameter_error("lohe_generator: k must be 1, 2 or 3");
  }
}

struct OmegaTriple {
  double omega1 = 0.0;
  double omega2 = 0.0;
  double omega3 = 0.0;
};

/// Omega = w1 L1 + w2 L2 + w3 L3 (skew-symmetric).
inline Eigen::Matrix4d build_omega(const OmegaTriple& w) {
  if (!std::isfinite(w.omega1) || !std::isfinite(w.omega2) || !std::isfinite(w.omega3))
    throw parameter_error("build_omega: frequencies must be finite");
  return w.omega1 * lohe_generator(1) + w.omega2 * lohe_generator(2) +
         w.omega3 * lohe_generator(3);
}

/// N unit 4-vectors on S^3, one column per oscillator.
struct LoheState {
  Eigen::Matrix4Xd x;
  double t = 0.0;

  Eigen::Index size() const { return x.cols(); }
};

namespace detail {

struct LoheRhs {
  std::vector<Eigen::Matrix4d> omega;
  std::vector<CouplingEdge> edges;
  double gain; // s * K / N

  void operator()(const Eigen::Matrix4Xd& x, Eigen::Matrix4Xd& out) const {
    const Eigen::Index n = x.cols();
    for (Eigen::Index i = 0; i < n; ++i) out.col(i).noalias() = omega[i] * x.col(i);
    for (const auto& e : edges) {
      const double dot = x.col(e.i).dot(x.col(e.j));
      out.col(e.i) += (gain * e.w) * (x.col(e.j) - x.col(e.i) * dot);
      out.col(e.j) += (gain * e.w) * (x.col(e.i) - x.col(e.j) * dot);
    }
  }
};

inline LoheRhs make_lohe_rhs(std::span<const OmegaTriple> omegas, double coupling,
                             const BiasedGraph& g, CouplingSign sign) {
  LoheRhs rhs;
  rhs.omega.reserve(omegas.size());
  for (const auto& w : omegas) rhs.omega.push_back(build_omega(w));
  rhs.edges = coupling_edges(g);
  rhs.gain = sign_factor(sign) * coupling / static_cast<double>(g.n);
  return rhs;
}

} // namespace detail

/// dx_i/dt = Omega_i x_i + s (K/N) sum_j a_ij [x_j - x_i (x_j . x_i)].
/// The coupling term is tangent to the sphere; attractive sign (default)
/// pulls paired vectors toward alignment.
inline Eigen::Matrix4Xd lohe_rhs(const LoheState& state, std::span<const OmegaTriple> omegas,
                                 double coupling, const BiasedGraph& g,
                                 CouplingSign sign = CouplingSign::attractive) {
  if (state.size() != g.n || static_cast<int>(omegas.size()) != g.n)
    throw contract_error("lohe_rhs: state/omega count does not match the graph");
  if (!(coupling >= 0.0)) throw parameter_error("lohe_rhs: coupling must be >= 0");
  const auto rhs = detail::make_lohe_rhs(omegas, coupling, g, sign);
  Eigen::Matrix4Xd out(4, g.n);
  rhs(state.x, out);
  return out;
}

using LoheObserver = std::function<void(double t, const LoheState&)>;

struct LoheTrajectory {
  LoheState final_state;
  double max_norm_drift = 0.0; // max per-step |norm - 1| before renormalization
};

/// Fixed-step RK4 on the sphere product with per-step renormalization of
/// each 4-vector; the largest pre-renormalization norm deviation is
/// reported so the tangency invariant stays observable.
inline LoheTrajectory integrate_lohe(const LoheState& initial, std::span<const OmegaTriple> omegas,
                                     double coupling, const BiasedGraph& g, double dt,
                                     long n_steps, std::span<const long> sample_steps = {},
                                     const LoheObserver& observer = {},
                                     CouplingSign sign = CouplingSign::attractive) {
  if (initial.size() != g.n || static_cast<int>(omegas.size()) != g.n)
    throw contract_error("integrate_lohe: state/omega count does not match the graph");
  if (!(dt > 0.0)) throw parameter_error("integrate_lohe: dt must be positive");
  if (n_steps < 1) throw parameter_error("integrate_lohe: n_steps must be >= 1");
  for (Eigen::Index i = 0; i < initial.size(); ++i)
    if (std::abs(initial.x.col(i).norm() - 1.0) > 1e-8)
      throw contract_error("integrate_lohe: initial vectors must be unit norm");

  const auto rhs = detail::make_lohe_rhs(omegas, coupling, g, sign);
  const Eigen::Index n = initial.size();
  Eigen::Matrix4Xd x = initial.x;
  Eigen::Matrix4Xd k1(4, n), k2(4, n), k3(4, n), k4(4, n), tmp(4, n);

  LoheTrajectory traj;
  std::size_t si = 0;
  auto emit = [&](long step, double t) {
    while (si < sample_steps.size() && sample_steps[si] == step) {
      if (observer) observer(t, LoheState{x, t});
      ++si;
    }
  };
  emit(0, initial.t);

  double t = initial.t;
  for (long step = 1; step <= n_steps; ++step) {
    rhs(x, k1);
    tmp = x + (0.5 * dt) * k1;
    rhs(tmp, k2);
    tmp = x + (0.5 * dt) * k2;
    rhs(tmp, k3);
    tmp = x + dt * k3;
    rhs(tmp, k4);
    x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!x.allFinite())
      throw numeric_error("integrate_lohe: non-finite state at step " + std::to_string(step));
    for (Eigen::Index i = 0; i < n; ++i) {
      const double norm = x.col(i).norm();
      traj.max_norm_drift = std::max(traj.max_norm_drift, std::abs(norm - 1.0));
      x.col(i) /= norm;
    }
    t = initial.t + static_cast<double>(step) * dt;
    emit(step, t);
  }
  traj.final_state = LoheState{std::move(x), t};
  return traj;
}

/// Mean pairwise dot product (2 / N(N-1)) sum_{i<j} x_i . x_j.
inline double lohe_sync_metric(const LoheState& state) {
  const Eigen::Index n = state.size();
  if (n < 2) throw parameter_error("lohe_sync_metric: need at least 2 oscillators");
  const Eigen::Vector4d total = state.x.rowwise().sum();
  double self = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) self += state.x.col(i).squaredNorm();
  const double nd = static_cast<double>(n);
  return (total.squaredNorm() - self) / (nd * (nd - 1.0));
}

/// Map a projected 2-state (alpha, beta) to a unit 4-vector via the
/// U = [[alpha, -beta], [conj(beta), conj(alpha)]] parameterization with
/// alpha = w + iz and beta = -(y + ix): under it a global phase
/// e^{i phi} on (alpha, beta) acts as the rotation exp(-phi L3).
inline Eigen::Vector4d state_to_s3(complexd alpha, complexd beta) {
  Eigen::Vector4d v(-beta.imag(), -beta.real(), alpha.imag(), alpha.real());
  const double norm = v.norm();
  if (norm < 1e-300) throw numeric_error("state_to_s3: zero state");
  return v / norm;
}

/// Configuration of the QL-bit emulation experiment: a chain of QL bits
/// with strong internal coupling and weak weighted inter-bit edges, run
/// under the vertex-level Kuramoto flow and compared against an
/// N-bit Lohe flow with matched frequencies.
struct LoheEmulationConfig {
  int n_bits = 4;
  int n0 = 8;
  int d = 5;
  double p_intra = 0.5;       // cross-edge probability inside each QL bit
  double p_inter = 0.2;       // between every pair of QL bits
  double inter_weight = 0.2;  // weight of inter-bit edges
  double coupling = 250.0;    // Kuramoto K on the vertex network
  double lohe_coupling = 0.0; // 0 -> matched value coupling * inter_weight * p_inter
  double sigma_nu = 1.0;
  double mean_freq = 100.0;
  double periods = 40.0;
  int steps_per_period = 100;
  int n_samples = 41;
  std::uint64_t base_seed = 7;

  void validate() const {
    if (n_bits < 2) throw parameter_error("LoheEmulationConfig: n_bits must be >= 2");
    if (n0 < 2) throw parameter_error("LoheEmulationConfig: n0 must be >= 2");
    if (d <= 0 || d >= n0) throw parameter_error("LoheEmulationConfig: require 0 < d < n0");
    if (!(p_intra >= 0.0 && p_intra <= 1.0) || !(p_inter >= 0.0 && p_inter <= 1.0))
      throw parameter_error("LoheEmulationConfig: probabilities must lie in [0, 1]");
    if (!(inter_weight > 0.0))
      throw parameter_error("LoheEmulationConfig: inter_weight must be positive");
    if (!(coupling >= 0.0) || !(lohe_coupling >= 0.0))
      throw parameter_error("LoheEmulationConfig: couplings must be >= 0");
    if (!(sigma_nu >= 0.0)) throw parameter_error("LoheEmulationConfig: sigma_nu must be >= 0");
    if (!(mean_freq > 0.0)) throw parameter_error("LoheEmulationConfig: mean_freq must be > 0");
    if (!(periods > 0.0)) throw parameter_error("LoheEmulationConfig: periods must be > 0");
    if (steps_per_period < 1)
      throw parameter_error("LoheEmulationConfig: steps_per_period must be >= 1");
    if (n_samples < 2) throw parameter_error("LoheEmulationConfig: n_samples must be >= 2");
  }
};

struct LoheComparison {
  std::vector<double> t; // mean periods
  std::vector<double> network_metric;
  std::vector<double> lohe_metric;
  std::vector<std::vector<Eigen::Vector4d>> network_vectors; // [sample][bit]
  std::vector<std::string> warnings;
};

/// Runs the Kuramoto network of coupled QL bits, projects each bit's
/// emergent 2-state at the sample times onto S^3, and reports the sync
/// metric next to a Lohe run with matched frequencies and initial vectors.
inline LoheComparison run_lohe_emulation(const LoheEmulationConfig& cfg) {
  cfg.validate();
  LoheComparison out;
  if (cfg.inter_weight >= 1.0)
    out.warnings.push_back(
        "inter-QL-bit coupling weight is not weaker than the intra-bit coupling");

  const int bit_size = 2 * cfg.n0;
  const int n_total = cfg.n_bits * bit_size;
  const std::uint64_t graph_seed = derive_seed(cfg.base_seed, SeedStream::graph);

  std::vector<BiasedGraph> bits;
  std::vector<Eigen::VectorXcd> reference; // per-bit emergent eigenvector
  for (int k = 0; k < cfg.n_bits; ++k) {
    const std::string prefix = "q" + std::to_string(k);
    BiasedGraph g1 = gen_d_regular_random(cfg.n0, cfg.d, mix_seed(graph_seed + 3 * k), prefix + "a");
    BiasedGraph g2 =
        gen_d_regular_random(cfg.n0, cfg.d, mix_seed(graph_seed + 3 * k + 1), prefix + "b");
    bits.push_back(connect_subgraphs(g1, g2, cfg.p_intra, complexd{1.0, 0.0},
                                     mix_seed(graph_seed + 3 * k + 2)));
    EmergentState ref = emergent_eigenvector(bits.back().adjacency);
    if (ref.degenerate)
      out.warnings.push_back("QL bit " + std::to_string(k) + " has a degenerate emergent state");
    reference.push_back(std::move(ref.vector));
  }

  std::vector<CrossSpec> specs;
  for (std::size_t a = 0; a < bits.size(); ++a)
    for (std::size_t b = a + 1; b < bits.size(); ++b)
      specs.push_back({a, b, cfg.p_inter, complexd{1.0, 0.0}, cfg.inter_weight});
  const BiasedGraph network =
      disjoint_union_coupled(bits, specs, derive_seed(cfg.base_seed, SeedStream::cross_edges));

  const Eigen::VectorXd eps =
      sample_frequencies(n_total, cfg.sigma_nu, derive_seed(cfg.base_seed, SeedStream::frequencies));
  Rng phase_rng(derive_seed(cfg.base_seed, SeedStream::phases));
  Eigen::VectorXd theta0(n_total);
  for (int k = 0; k < cfg.n_bits; ++k)
    theta0.segment(k * bit_size, bit_size).setConstant(phase_rng.uniform_range(-pi, pi));

  const double period = 2.0 * pi / cfg.mean_freq;
  const double dt = period / cfg.steps_per_period;
  const long n_steps = std::lround(cfg.periods * cfg.steps_per_period);
  std::vector<long> samples(cfg.n_samples);
  for (int s = 0; s < cfg.n_samples; ++s)
    samples[s] = std::lround(static_cast<double>(s) * n_steps / (cfg.n_samples - 1));

  auto project_bits = [&](const Eigen::VectorXd& theta) {
    std::vector<Eigen::Vector4d> vecs(cfg.n_bits);
    for (int k = 0; k < cfg.n_bits; ++k) {
      const int off = k * bit_size;
      complexd alpha{0.0, 0.0}, beta{0.0, 0.0};
      for (int i = 0; i < cfg.n0; ++i)
        alpha += std::polar(1.0, -theta(off + i)) * reference[k](i);
      for (int i = cfg.n0; i < bit_size; ++i)
        beta += std::polar(1.0, -theta(off + i)) * reference[k](i);
      vecs[k] = state_to_s3(alpha, beta);
    }
    return vecs;
  };

  OscillatorParams params;
  params.coupling = cfg.coupling;
  params.sigma_nu = cfg.sigma_nu;
  params.mean_freq = cfg.mean_freq;
  integrate(PhaseState(theta0, eps), params, network, dt, n_steps, samples,
            [&](double t, const Eigen::VectorXd& theta) {
              out.t.push_back(t / period);
              auto vecs = project_bits(theta);
              Eigen::Matrix4Xd m(4, cfg.n_bits);
              for (int k = 0; k < cfg.n_bits; ++k) m.col(k) = vecs[k];
              out.network_metric.push_back(lohe_sync_metric(LoheState{m, t}));
              out.network_vectors.push_back(std::move(vecs));
            });

  // Matched Lohe run: one oscillator per QL bit on a complete graph.
  // Averaging the vertex equation over an internally locked bit leaves an
  // inter-bit sine coupling of strength K * w * p_inter * 2n0 / N_total per
  // pair; matching the (K_L / n_bits) prefactor gives K_L = K * w * p_inter.
  const double k_lohe = cfg.lohe_coupling > 0.0
                            ? cfg.lohe_coupling
                            : cfg.coupling * cfg.inter_weight * cfg.p_inter;
  std::vector<OmegaTriple> omegas(cfg.n_bits);
  for (int k = 0; k < cfg.n_bits; ++k)
    omegas[k] = {0.0, 0.0, eps.segment(k * bit_size, bit_size).mean()};
  Eigen::Matrix4Xd x0(4, cfg.n_bits);
  for (int k = 0; k < cfg.n_bits; ++k) x0.col(k) = out.network_vectors.front()[k];

  const BiasedGraph lohe_graph = complete_graph(cfg.n_bits, "lohe");
  integrate_lohe(LoheState{x0, 0.0}, omegas, k_lohe, lohe_graph, dt, n_steps, samples,
                 [&](double, const LoheState& s) {
                   out.lohe_metric.push_back(lohe_sync_metric(s));
                 });
  return out;
}

} // namespace qlsync
