#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include <qlsync/errors.hpp>
#include <qlsync/graph.hpp>
#include <qlsync/random.hpp>

namespace qlsync {

/// Sign convention for the sine coupling. The attractive convention
/// (+K/N in front of the coupling sum) synchronizes for large K and is
/// the default; paper_literal keeps the printed -K/N prefactor, under
/// which the in-phase state is linearly unstable.
enum class CouplingSign { attractive, paper_literal };

inline double sign_factor(CouplingSign s) {
  return s == CouplingSign::attractive ? 1.0 : -1.0;
}

struct OscillatorParams {
  double coupling = 250.0; // K
  double sigma_nu = 1.0;
  double mean_freq = 100.0; // used only to convert periods to time units
  CouplingSign sign = CouplingSign::attractive;
  int normalization = 0; // divisor N in K/N; 0 means the oscillator count

  double period() const { return 2.0 * pi / mean_freq; }

  void validate() const {
    if (!(coupling >= 0.0)) throw parameter_error("OscillatorParams: coupling must be >= 0");
    if (!(sigma_nu >= 0.0)) throw parameter_error("OscillatorParams: sigma_nu must be >= 0");
    if (!(mean_freq > 0.0)) throw parameter_error("OscillatorParams: mean_freq must be > 0");
    if (normalization < 0)
      throw parameter_error("OscillatorParams: normalization must be >= 0");
  }
};

/// Oscillator phases and frequency offsets in the rotating frame of the
/// mean frequency. Offsets are recentred to exactly zero mean.
struct PhaseState {
  Eigen::VectorXd theta;
  Eigen::VectorXd epsilon;
  double t = 0.0;

  PhaseState() = default;
  PhaseState(Eigen::VectorXd th, Eigen::VectorXd eps, double time = 0.0)
      : theta(std::move(th)), epsilon(std::move(eps)), t(time) {
    if (theta.size() != epsilon.size())
      throw contract_error("PhaseState: theta and epsilon sizes differ");
    if (epsilon.size() > 0) epsilon.array() -= epsilon.mean();
  }

  /// Phases wrapped to [-pi, pi) for reporting.
  Eigen::VectorXd wrapped() const {
    Eigen::VectorXd w(theta.size());
    for (Eigen::Index i = 0; i < theta.size(); ++i)
      w(i) = std::remainder(theta(i), 2.0 * pi);
    return w;
  }
};

/// n draws from a zero-mean normal with std sigma_nu, then recentred so
/// the sample sum is exactly zero.
inline Eigen::VectorXd sample_frequencies(int n, double sigma_nu, std::uint64_t seed) {
  if (n <= 0) throw parameter_error("sample_frequencies: n must be positive");
  if (!(sigma_nu >= 0.0))
    throw parameter_error("sample_frequencies: sigma_nu must be >= 0");
  Eigen::VectorXd eps = Eigen::VectorXd::Zero(n);
  if (sigma_nu == 0.0) return eps;
  Rng rng(seed);
  for (int i = 0; i < n; ++i) eps(i) = sigma_nu * rng.normal();
  eps.array() -= eps.mean();
  return eps;
}

/// Initial-phase distribution: either uniform on [mu - pi, mu + pi) or a
/// von Mises centered at mu whose concentration is solved from the
/// requested circular standard deviation. circ_std = 0 is the delta limit.
struct PhaseInit {
  bool uniform = true;
  double circ_std = 0.001;
  double mu = 0.0;
};

inline Eigen::VectorXd sample_initial_phases(int n, const PhaseInit& init, std::uint64_t seed) {
  if (n <= 0) throw parameter_error("sample_initial_phases: n must be positive");
  Eigen::VectorXd phi(n);
  Rng rng(seed);
  if (init.uniform) {
    for (int i = 0; i < n; ++i) phi(i) = init.mu + rng.uniform_range(-pi, pi);
    return phi;
  }
  if (init.circ_std < 0.0)
    throw parameter_error("sample_initial_phases: circ_std must be >= 0");
  if (init.circ_std == 0.0) {
    phi.setConstant(init.mu);
    return phi;
  }
  const double kappa = vonmises_kappa_from_circ_std(init.circ_std);
  for (int i = 0; i < n; ++i) phi(i) = rng.von_mises(init.mu, kappa);
  return phi;
}

struct CouplingEdge {
  int i;
  int j;
  double w; // |adjacency entry|: 1 for unit-bias edges, the weight otherwise
};

inline std::vector<CouplingEdge> coupling_edges(const BiasedGraph& g) {
  std::vector<CouplingEdge> edges;
  for (int i = 0; i < g.n; ++i)
    for (int j = i + 1; j < g.n; ++j) {
      const double m = std::abs(g.adjacency(i, j));
      if (m > 0.0) edges.push_back({i, j, m});
    }
  return edges;
}

namespace detail {

/// d(theta)/dt = epsilon_i + s (K/N) sum_j a_ij sin(theta_j - theta_i),
/// evaluated with one sincos per vertex and one product per edge.
struct KuramotoRhs {
  const std::vector<CouplingEdge>& edges;
  const Eigen::VectorXd& epsilon;
  double gain; // s * K / N
  mutable Eigen::VectorXd cos_t, sin_t;

  KuramotoRhs(const std::vector<CouplingEdge>& e, const Eigen::VectorXd& eps, double g)
      : edges(e), epsilon(eps), gain(g), cos_t(eps.size()), sin_t(eps.size()) {}

  void operator()(const Eigen::VectorXd& theta, Eigen::VectorXd& out) const {
    const Eigen::Index n = theta.size();
    for (Eigen::Index i = 0; i < n; ++i) {
      cos_t(i) = std::cos(theta(i));
      sin_t(i) = std::sin(theta(i));
    }
    out = epsilon;
    for (const auto& e : edges) {
      const double s = sin_t(e.j) * cos_t(e.i) - cos_t(e.j) * sin_t(e.i);
      out(e.i) += gain * e.w * s;
      out(e.j) -= gain * e.w * s;
    }
  }
};

} // namespace detail

inline Eigen::VectorXd kuramoto_rhs(const PhaseState& state, const OscillatorParams& params,
                                    const BiasedGraph& g) {
  params.validate();
  if (state.theta.size() != g.n)
    throw contract_error("kuramoto_rhs: state dimension does not match the graph");
  const auto edges = coupling_edges(g);
  const int divisor = params.normalization > 0 ? params.normalization : g.n;
  detail::KuramotoRhs rhs(edges, state.epsilon,
                          sign_factor(params.sign) * params.coupling / divisor);
  Eigen::VectorXd out(g.n);
  rhs(state.theta, out);
  return out;
}

using PhaseObserver = std::function<void(double t, const Eigen::VectorXd& theta)>;

/// Fixed-step RK4 integration of the Kuramoto equation in the rotating
/// frame. The observer is invoked with (t, theta) at the requested step
/// indices (0 = initial state). Throws numeric_error naming the step if a
/// phase becomes non-finite.
inline PhaseState integrate(const PhaseState& initial, const OscillatorParams& params,
                            const BiasedGraph& g, double dt, long n_steps,
                            std::span<const long> sample_steps = {},
                            const PhaseObserver& observer = {}) {
  params.validate();
  if (initial.theta.size() != g.n)
    throw contract_error("integrate: state dimension does not match the graph");
  if (!(dt > 0.0)) throw parameter_error("integrate: dt must be positive");
  if (n_steps < 1) throw parameter_error("integrate: n_steps must be >= 1");
  for (std::size_t k = 0; k < sample_steps.size(); ++k) {
    if (sample_steps[k] < 0 || sample_steps[k] > n_steps)
      throw parameter_error("integrate: sample step outside [0, n_steps]");
    if (k > 0 && sample_steps[k] < sample_steps[k - 1])
      throw parameter_error("integrate: sample steps must be sorted");
  }

  const auto edges = coupling_edges(g);
  const int divisor = params.normalization > 0 ? params.normalization : g.n;
  detail::KuramotoRhs rhs(edges, initial.epsilon,
                          sign_factor(params.sign) * params.coupling / divisor);

  Eigen::VectorXd theta = initial.theta;
  Eigen::VectorXd k1(g.n), k2(g.n), k3(g.n), k4(g.n), tmp(g.n);

  std::size_t si = 0;
  auto emit = [&](long step, double t) {
    while (si < sample_steps.size() && sample_steps[si] == step) {
      if (observer) observer(t, theta);
      ++si;
    }
  };
  emit(0, initial.t);

  double t = initial.t;
  for (long step = 1; step <= n_steps; ++step) {
    rhs(theta, k1);
    tmp = theta + (0.5 * dt) * k1;
    rhs(tmp, k2);
    tmp = theta + (0.5 * dt) * k2;
    rhs(tmp, k3);
    tmp = theta + dt * k3;
    rhs(tmp, k4);
    theta += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t = initial.t + static_cast<double>(step) * dt;
    if (!theta.allFinite())
      throw numeric_error("integrate: non-finite phase at step " + std::to_string(step));
    emit(step, t);
  }
  return PhaseState(std::move(theta), initial.epsilon, t);
}

/// Kuramoto order parameter: re = Re((1/N) sum e^{i theta_k}) and the
/// modulus of the same mean phasor.
struct OrderParameter {
  double re = 0.0;
  double modulus = 0.0;
};

inline OrderParameter order_parameter(const Eigen::VectorXd& theta) {
  if (theta.size() < 1) throw parameter_error("order_parameter: need at least one phase");
  double cs = 0.0, sn = 0.0;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    cs += std::cos(theta(i));
    sn += std::sin(theta(i));
  }
  const double n = static_cast<double>(theta.size());
  cs /= n;
  sn /= n;
  return {cs, std::sqrt(cs * cs + sn * sn)};
}

} // namespace qlsync
