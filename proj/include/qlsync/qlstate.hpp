#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include <qlsync/errors.hpp>
#include <qlsync/graph.hpp>

namespace qlsync {

/// A' = Phi^{-1} A Phi with Phi = diag(e^{i theta_k}): each entry (j, k)
/// is multiplied by e^{-i(theta_j - theta_k)}. Unitary similarity, so the
/// spectrum is unchanged; Hermiticity and the zero diagonal are preserved.
inline Eigen::MatrixXcd transform_adjacency(const BiasedGraph& g, const Eigen::VectorXd& theta) {
  if (theta.size() != g.n)
    throw contract_error("transform_adjacency: phase vector does not match graph size");
  Eigen::MatrixXcd out(g.n, g.n);
  for (int j = 0; j < g.n; ++j)
    for (int k = 0; k < g.n; ++k) {
      const complexd a = g.adjacency(j, k);
      out(j, k) = (a == complexd{0.0, 0.0}) ? complexd{0.0, 0.0}
                                            : a * std::polar(1.0, -(theta(j) - theta(k)));
    }
  return out;
}

enum class EigMethod { automatic, dense, power };

/// Unit-norm eigenvector of the largest eigenvalue, phase-fixed so its
/// largest-modulus coefficient is real positive, with the gap to the next
/// eigenvalue as a degeneracy diagnostic.
struct EmergentState {
  Eigen::VectorXcd vector;
  double eigenvalue = 0.0;
  double gap = 0.0;
  bool degenerate = false; // gap < 1e-8: top eigenvalue effectively repeated
};

namespace detail {

inline void fix_phase(Eigen::VectorXcd& v) {
  const int idx = dominant_index(v);
  const complexd lead = v(idx);
  const double mod = std::abs(lead);
  if (mod > 0.0) v *= std::conj(lead) / mod;
}

/// Shifted power iteration with one deflation pass; used for matrices too
/// large for a routine full decomposition. The shift makes the top
/// eigenvalue the dominant modulus of A + shift*I.
inline EmergentState top_eigenpair_power(const Eigen::MatrixXcd& a) {
  const int n = static_cast<int>(a.rows());
  const double shift = a.cwiseAbs().rowwise().sum().maxCoeff() + 1.0;
  const double scale = shift;
  constexpr int max_iters = 50000;

  auto iterate = [&](Eigen::VectorXcd v, const Eigen::VectorXcd* deflate,
                     double& lambda_out) -> Eigen::VectorXcd {
    if (deflate) v -= (*deflate) * deflate->dot(v);
    v.normalize();
    Eigen::VectorXcd w(n);
    for (int it = 0; it < max_iters; ++it) {
      w.noalias() = a * v;
      w += shift * v;
      if (deflate) w -= (*deflate) * deflate->dot(w);
      const double lambda = std::real(v.dot(w));
      const double resid = (w - lambda * v).norm();
      const double wn = w.norm();
      if (wn == 0.0) throw numeric_error("top_eigenpair_power: iterate vanished");
      v = w / wn;
      if (resid <= 1e-9 * scale) {
        lambda_out = lambda - shift;
        return v;
      }
    }
    throw numeric_error("top_eigenpair_power: power iteration did not converge");
  };

  EmergentState s;
  double lambda0 = 0.0, lambda1 = 0.0;
  // mild index ramp so the start is never orthogonal to a symmetric eigenspace
  Eigen::VectorXcd start(n);
  for (int i = 0; i < n; ++i)
    start(i) = complexd{1.0 + 0.01 * static_cast<double>(i) / n, 0.0};
  Eigen::VectorXcd v0 = iterate(start, nullptr, lambda0);
  // second vector: start from the basis vector least aligned with v0
  int least = 0;
  double lm = std::abs(v0(0));
  for (int i = 1; i < n; ++i)
    if (std::abs(v0(i)) < lm) {
      lm = std::abs(v0(i));
      least = i;
    }
  Eigen::VectorXcd e = Eigen::VectorXcd::Zero(n);
  e(least) = 1.0;
  iterate(e, &v0, lambda1);

  s.vector = v0;
  fix_phase(s.vector);
  s.eigenvalue = lambda0;
  s.gap = std::max(0.0, lambda0 - lambda1);
  s.degenerate = s.gap < 1e-8;
  return s;
}

} // namespace detail

inline EmergentState emergent_eigenvector(const Eigen::MatrixXcd& a,
                                          EigMethod method = EigMethod::automatic) {
  detail::check_hermitian(a, "emergent_eigenvector");
  const int n = static_cast<int>(a.rows());
  if (method == EigMethod::automatic)
    method = n <= 512 ? EigMethod::dense : EigMethod::power;
  if (method == EigMethod::power && n >= 2) return detail::top_eigenpair_power(a);

  const Spectrum s = spectrum(a);
  EmergentState out;
  out.vector = s.eigenvectors.col(n - 1);
  out.eigenvalue = s.eigenvalues(n - 1);
  out.gap = n >= 2 ? s.eigenvalues(n - 1) - s.eigenvalues(n - 2)
                   : std::numeric_limits<double>::infinity();
  out.degenerate = out.gap < 1e-8;
  return out;
}

/// Projection coefficients of an emergent eigenvector onto the block
/// indicator basis, in effective-basis order (see BiasedGraph::block_labels).
/// residual is the pre-normalization weight outside that basis; c is
/// renormalized to unit norm.
struct EffectiveState {
  Eigen::VectorXcd c;
  double residual = 0.0;
  double t = 0.0;
};

/// Cached block structure for repeated projections onto the same graph.
struct EffectiveBasis {
  std::vector<std::string> labels;
  std::vector<std::vector<int>> vertices;
  std::vector<double> scale; // 1/sqrt(block size)

  static EffectiveBasis from_graph(const BiasedGraph& g) {
    EffectiveBasis b;
    b.labels = g.block_labels();
    if (b.labels.size() != 2 && b.labels.size() != 4)
      throw contract_error("EffectiveBasis: expected 2 or 4 blocks, found " +
                           std::to_string(b.labels.size()));
    for (const auto& label : b.labels) {
      b.vertices.push_back(g.block_vertices(label));
      b.scale.push_back(1.0 / std::sqrt(static_cast<double>(b.vertices.back().size())));
    }
    return b;
  }

  EffectiveState project(const Eigen::VectorXcd& v, double t = 0.0) const {
    Eigen::VectorXcd c(static_cast<Eigen::Index>(labels.size()));
    for (std::size_t k = 0; k < labels.size(); ++k) {
      complexd sum{0.0, 0.0};
      for (int idx : vertices[k]) sum += v(idx);
      c(static_cast<Eigen::Index>(k)) = scale[k] * sum;
    }
    const double weight = c.squaredNorm();
    if (weight < 1e-300)
      throw numeric_error("project_effective: eigenvector carries no weight on the blocks");
    EffectiveState s;
    s.t = t;
    s.residual = std::clamp(1.0 - weight, 0.0, 1.0);
    s.c = c / std::sqrt(weight);
    return s;
  }
};

inline EffectiveState project_effective(const Eigen::VectorXcd& v, const BiasedGraph& g,
                                        double t = 0.0) {
  if (v.size() != g.n)
    throw contract_error("project_effective: vector size does not match graph");
  if (std::abs(v.norm() - 1.0) > 1e-6)
    throw contract_error("project_effective: eigenvector must be unit norm");
  return EffectiveBasis::from_graph(g).project(v, t);
}

/// Projection of the emergent state of the phase-transformed adjacency,
/// computed without re-diagonalizing: the top eigenvector of Phi^{-1} A Phi
/// is exactly e^{-i theta_k} v0_k when v0 is the top eigenvector of A
/// (unitary similarity), so one reference eigensolve covers every sample.
inline EffectiveState project_phase_modulated(const Eigen::VectorXd& theta,
                                              const Eigen::VectorXcd& v0,
                                              const EffectiveBasis& basis, double t = 0.0) {
  if (theta.size() != v0.size())
    throw contract_error("project_phase_modulated: phase/eigenvector size mismatch");
  Eigen::VectorXcd c(static_cast<Eigen::Index>(basis.labels.size()));
  for (std::size_t k = 0; k < basis.labels.size(); ++k) {
    complexd sum{0.0, 0.0};
    for (int idx : basis.vertices[k]) sum += std::polar(1.0, -theta(idx)) * v0(idx);
    c(static_cast<Eigen::Index>(k)) = basis.scale[k] * sum;
  }
  const double weight = c.squaredNorm();
  if (weight < 1e-300)
    throw numeric_error("project_phase_modulated: state carries no block weight");
  EffectiveState s;
  s.t = t;
  s.residual = std::clamp(1.0 - weight, 0.0, 1.0);
  s.c = c / std::sqrt(weight);
  return s;
}

/// Ensemble-averaged density matrix: rho_mn = (1/M) sum_prep c_m conj(c_n),
/// Hermitized and normalized to unit trace.
struct DensityMatrix {
  Eigen::MatrixXcd rho;

  void validate() const {
    const auto dim = rho.rows();
    if (dim < 1 || rho.cols() != dim) throw contract_error("DensityMatrix: not square");
    if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > 1e-12)
      throw contract_error("DensityMatrix: not Hermitian");
    if (std::abs(rho.trace().real() - 1.0) > 1e-12 || std::abs(rho.trace().imag()) > 1e-12)
      throw contract_error("DensityMatrix: trace must be 1");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(rho, Eigen::EigenvaluesOnly);
    if (solver.eigenvalues().minCoeff() < -1e-10)
      throw contract_error("DensityMatrix: not positive semidefinite");
    const double p = rho.squaredNorm();
    if (p < 1.0 / static_cast<double>(dim) - 1e-9 || p > 1.0 + 1e-9)
      throw contract_error("DensityMatrix: purity outside [1/dim, 1]");
  }
};

inline DensityMatrix accumulate_density(std::span<const EffectiveState> states) {
  if (states.empty())
    throw parameter_error("accumulate_density: preparation set must be non-empty");
  const Eigen::Index dim = states.front().c.size();
  const double t0 = states.front().t;
  Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(dim, dim);
  for (const auto& s : states) {
    if (s.c.size() != dim)
      throw parameter_error("accumulate_density: mixed state dimensions");
    if (std::abs(s.t - t0) > 1e-12 * std::max(1.0, std::abs(t0)))
      throw parameter_error("accumulate_density: states must share the sample time");
    acc.noalias() += s.c * s.c.adjoint();
  }
  acc /= static_cast<double>(states.size());
  acc = (0.5 * (acc + acc.adjoint())).eval();
  const double tr = acc.trace().real();
  if (!(tr > 0.0)) throw numeric_error("accumulate_density: vanishing trace");
  acc /= tr;
  DensityMatrix d{std::move(acc)};
  d.validate();
  return d;
}

/// Tr(rho^2); equals the squared Frobenius norm for Hermitian rho.
inline double purity(const DensityMatrix& d) { return d.rho.squaredNorm(); }

struct TimedDensity {
  double t = 0.0;
  DensityMatrix rho;
};

/// Magnitudes of the six upper off-diagonal elements plus the four
/// diagonal populations as time series (4x4 density matrices only).
struct OffdiagSeries {
  static constexpr std::array<std::pair<int, int>, 6> pairs = {
      {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};
  std::vector<double> t;
  std::array<std::vector<double>, 6> offdiag_abs;
  std::array<std::vector<double>, 4> diag;
};

inline OffdiagSeries offdiag_series(std::span<const TimedDensity> rhos) {
  if (rhos.empty()) throw parameter_error("offdiag_series: sequence must be non-empty");
  OffdiagSeries out;
  for (const auto& td : rhos) {
    if (td.rho.rho.rows() != 4)
      throw contract_error("offdiag_series: expected 4x4 density matrices");
    out.t.push_back(td.t);
    for (std::size_t k = 0; k < OffdiagSeries::pairs.size(); ++k) {
      const auto [m, n] = OffdiagSeries::pairs[k];
      out.offdiag_abs[k].push_back(std::abs(td.rho.rho(m, n)));
    }
    for (int m = 0; m < 4; ++m) out.diag[m].push_back(td.rho.rho(m, m).real());
  }
  return out;
}

} // namespace qlsync
