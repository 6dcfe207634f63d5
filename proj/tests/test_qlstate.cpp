#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <vector>

#include <qlsync/kuramoto.hpp>
#include <qlsync/qlstate.hpp>

using namespace qlsync;
using Catch::Approx;

namespace {

BiasedGraph desk_ql_bit(std::uint64_t seed, double p = 0.2, complexd bias = {1.0, 0.0}) {
  return connect_subgraphs(gen_d_regular_random(8, 5, mix_seed(seed), "a1"),
                           gen_d_regular_random(8, 5, mix_seed(seed + 1), "a2"), p, bias,
                           mix_seed(seed + 2));
}

BiasedGraph desk_product(std::uint64_t seed) {
  BiasedGraph bit_a = desk_ql_bit(seed);
  BiasedGraph bit_b = connect_subgraphs(gen_d_regular_random(8, 5, mix_seed(seed + 10), "b1"),
                                        gen_d_regular_random(8, 5, mix_seed(seed + 11), "b2"),
                                        0.2, complexd{1.0, 0.0}, mix_seed(seed + 12));
  return cartesian_product(bit_a, bit_b);
}

std::vector<double> sorted(const Eigen::VectorXd& v) {
  std::vector<double> out(v.data(), v.data() + v.size());
  std::sort(out.begin(), out.end());
  return out;
}

} // namespace

TEST_CASE("transform_adjacency", "[qlstate]") {
  const BiasedGraph g = desk_ql_bit(1);

  SECTION("equal phases leave the matrix untouched") {
    const Eigen::VectorXd theta = Eigen::VectorXd::Constant(g.n, 0.77);
    REQUIRE(transform_adjacency(g, theta) == g.adjacency);
  }

  SECTION("a single edge picks up e^{-i(theta_j - theta_k)}") {
    const BiasedGraph pair = complete_graph(2);
    Eigen::VectorXd theta(2);
    theta << 0.0, pi / 2.0;
    const Eigen::MatrixXcd a = transform_adjacency(pair, theta);
    REQUIRE(std::abs(a(0, 1) - complexd{0.0, 1.0}) < 1e-15);
    REQUIRE(std::abs(a(1, 0) - complexd{0.0, -1.0}) < 1e-15);
  }

  SECTION("the transform is Hermitian with zero diagonal") {
    const Eigen::VectorXd theta = sample_initial_phases(g.n, PhaseInit{true, 0.0, 0.0}, 3);
    const Eigen::MatrixXcd a = transform_adjacency(g, theta);
    REQUIRE((a - a.adjoint()).cwiseAbs().maxCoeff() < 1e-15);
    for (int i = 0; i < g.n; ++i) REQUIRE(a(i, i) == complexd{0.0, 0.0});
  }

  SECTION("the spectrum is invariant under the transform") {
    const std::vector<double> base = sorted(spectrum(g).eigenvalues);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const Eigen::VectorXd theta = sample_initial_phases(g.n, PhaseInit{true, 0.0, 0.0}, seed);
      const std::vector<double> transformed =
          sorted(spectrum(transform_adjacency(g, theta)).eigenvalues);
      for (std::size_t k = 0; k < base.size(); ++k)
        REQUIRE(std::abs(base[k] - transformed[k]) < 1e-9);
    }
  }

  SECTION("dimension mismatch is a contract error") {
    REQUIRE_THROWS_AS(transform_adjacency(g, Eigen::VectorXd::Zero(3)), contract_error);
  }
}

TEST_CASE("emergent_eigenvector", "[qlstate]") {
  SECTION("d-regular graph: constant vector with eigenvalue d") {
    const BiasedGraph g = gen_d_regular_random(16, 5, 21);
    const EmergentState top = emergent_eigenvector(g.adjacency);
    REQUIRE(top.eigenvalue == Approx(5.0).margin(1e-9));
    REQUIRE_FALSE(top.degenerate);
    const complexd mean = top.vector.sum() / 16.0;
    REQUIRE((top.vector.array() - mean).abs().maxCoeff() < 1e-9);
    REQUIRE(top.vector(0).real() > 0.0); // phase fixed
    REQUIRE(std::abs(top.vector(0).imag()) < 1e-12);
  }

  SECTION("Rayleigh quotient matches the returned eigenvalue") {
    const BiasedGraph g = desk_ql_bit(4);
    const EmergentState top = emergent_eigenvector(g.adjacency);
    const double rayleigh = std::real(top.vector.dot(g.adjacency * top.vector));
    REQUIRE(std::abs(rayleigh - top.eigenvalue) < 1e-10);
  }

  SECTION("an uncoupled QL-bit pair is flagged degenerate") {
    const BiasedGraph g = desk_ql_bit(5, 0.0);
    const EmergentState top = emergent_eigenvector(g.adjacency);
    REQUIRE(top.degenerate);
    REQUIRE(top.gap < 1e-8);
  }

  SECTION("dense and power paths agree") {
    const BiasedGraph g = connect_subgraphs(gen_d_regular_random(30, 5, 1, "a1"),
                                            gen_d_regular_random(30, 5, 2, "a2"), 0.2,
                                            {1.0, 0.0}, 3);
    const EmergentState dense = emergent_eigenvector(g.adjacency, EigMethod::dense);
    const EmergentState power = emergent_eigenvector(g.adjacency, EigMethod::power);
    REQUIRE(std::abs(dense.eigenvalue - power.eigenvalue) < 1e-9);
    REQUIRE(std::abs(dense.gap - power.gap) < 1e-6);
    REQUIRE(std::abs(std::abs(dense.vector.dot(power.vector))) == Approx(1.0).margin(1e-8));
  }

  SECTION("non-Hermitian input is rejected") {
    Eigen::MatrixXcd bad = Eigen::MatrixXcd::Zero(3, 3);
    bad(0, 1) = 1.0;
    REQUIRE_THROWS_AS(emergent_eigenvector(bad), contract_error);
  }
}

TEST_CASE("full-scale uncoupled product via the power path", "[qlstate][slow]") {
  // two QL bits with no hybridization edges: top eigenvalue 2d = 30 with a
  // fourfold-degenerate emergent family, so the gap vanishes
  const BiasedGraph bit_a = connect_subgraphs(gen_d_regular_random(20, 15, 1, "a1"),
                                              gen_d_regular_random(20, 15, 2, "a2"), 0.0,
                                              {1.0, 0.0}, 3);
  const BiasedGraph bit_b = connect_subgraphs(gen_d_regular_random(20, 15, 4, "b1"),
                                              gen_d_regular_random(20, 15, 5, "b2"), 0.0,
                                              {1.0, 0.0}, 6);
  const BiasedGraph p = cartesian_product(bit_a, bit_b);
  REQUIRE(p.n == 1600);
  const EmergentState top = emergent_eigenvector(p.adjacency); // n > 512: power path
  REQUIRE(top.eigenvalue == Approx(30.0).margin(1e-8));
  REQUIRE(top.gap < 1e-8);
  REQUIRE(top.degenerate);
}

TEST_CASE("project_effective", "[qlstate]") {
  SECTION("single QL bit with complete hybridization follows the edge bias") {
    // ratio beta/alpha = conj(bias); the four polarization-like patterns
    const std::vector<std::pair<complexd, complexd>> cases = {
        {{1.0, 0.0}, {1.0, 0.0}},
        {{-1.0, 0.0}, {-1.0, 0.0}},
        {{0.0, 1.0}, {0.0, -1.0}},
        {{0.0, -1.0}, {0.0, 1.0}},
    };
    for (const auto& [bias, expected_ratio] : cases) {
      const BiasedGraph g = desk_ql_bit(7, 1.0, bias);
      const EmergentState top = emergent_eigenvector(g.adjacency);
      const EffectiveState s = project_effective(top.vector, g);
      REQUIRE(s.c.size() == 2);
      const complexd ratio = s.c(1) / s.c(0);
      REQUIRE(std::abs(ratio - expected_ratio) < 1e-12);
      REQUIRE(s.c.norm() == Approx(1.0).margin(1e-12));
      REQUIRE(s.residual >= 0.0);
      REQUIRE(s.residual < 0.05);
    }
  }

  SECTION("full-scale product at zero phases projects onto (1,1,1,1)/2") {
    BiasedGraph bit_a = connect_subgraphs(gen_d_regular_random(20, 15, 31, "a1"),
                                          gen_d_regular_random(20, 15, 32, "a2"), 0.2,
                                          {1.0, 0.0}, 33);
    BiasedGraph bit_b = connect_subgraphs(gen_d_regular_random(20, 15, 34, "b1"),
                                          gen_d_regular_random(20, 15, 35, "b2"), 0.2,
                                          {1.0, 0.0}, 36);
    const BiasedGraph p = cartesian_product(bit_a, bit_b);
    const EmergentState top = emergent_eigenvector(p.adjacency);
    const EffectiveState s = project_effective(top.vector, p);
    REQUIRE(s.c.size() == 4);
    REQUIRE(s.residual < 0.05);
    for (int k = 0; k < 4; ++k) REQUIRE(std::abs(s.c(k) - complexd{0.5, 0.0}) < 0.05);
  }

  SECTION("coefficients follow the effective-basis label order") {
    const BiasedGraph p = desk_product(40);
    REQUIRE(p.block_labels() ==
            std::vector<std::string>{"a1b1", "a2b1", "a1b2", "a2b2"});
    const EmergentState top = emergent_eigenvector(p.adjacency);
    const EffectiveState s = project_effective(top.vector, p);
    const EffectiveBasis basis = EffectiveBasis::from_graph(p);
    for (int k = 0; k < 4; ++k) {
      const Eigen::VectorXcd j = block_indicator(p, basis.labels[k]).vector;
      const complexd raw = j.dot(top.vector);
      REQUIRE(std::abs(s.c(k) * std::sqrt(1.0 - s.residual) - raw) < 1e-12);
    }
  }

  SECTION("contract violations") {
    const BiasedGraph p = desk_product(41);
    const EmergentState top = emergent_eigenvector(p.adjacency);
    REQUIRE_THROWS_AS(project_effective(top.vector * 2.0, p), contract_error);
    REQUIRE_THROWS_AS(project_effective(Eigen::VectorXcd::Zero(3), p), contract_error);
    // three blocks: neither a QL bit nor a two-bit product
    const BiasedGraph tri = disjoint_union_coupled(
        {complete_graph(3, "x"), complete_graph(3, "y"), complete_graph(3, "z")}, {}, 1);
    Eigen::VectorXcd v = Eigen::VectorXcd::Constant(9, complexd{1.0 / 3.0, 0.0});
    REQUIRE_THROWS_AS(project_effective(v, tri), contract_error);
  }
}

TEST_CASE("accumulate_density", "[qlstate]") {
  SECTION("a single preparation is a pure projector") {
    EffectiveState s;
    s.c = Eigen::VectorXcd(4);
    s.c << complexd{0.5, 0.0}, complexd{0.0, 0.5}, complexd{-0.5, 0.0}, complexd{0.0, -0.5};
    s.t = 1.0;
    const DensityMatrix rho = accumulate_density(std::vector<EffectiveState>{s});
    REQUIRE((rho.rho - s.c * s.c.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
    REQUIRE(purity(rho) == Approx(1.0).margin(1e-12));
  }

  SECTION("one of each basis state is maximally mixed") {
    std::vector<EffectiveState> states(4);
    for (int k = 0; k < 4; ++k) {
      states[k].c = Eigen::VectorXcd::Zero(4);
      states[k].c(k) = 1.0;
    }
    const DensityMatrix rho = accumulate_density(states);
    REQUIRE((rho.rho - Eigen::MatrixXcd::Identity(4, 4) / 4.0).cwiseAbs().maxCoeff() < 1e-15);
    REQUIRE(purity(rho) == Approx(0.25).margin(1e-15));
  }

  SECTION("random relative phases erase the off-diagonal element") {
    Rng rng(17);
    const int m = 20000;
    std::vector<EffectiveState> states(m);
    for (int j = 0; j < m; ++j) {
      states[j].c = Eigen::VectorXcd::Zero(4);
      states[j].c(0) = 1.0 / std::sqrt(2.0);
      states[j].c(1) = std::polar(1.0 / std::sqrt(2.0), rng.uniform_range(-pi, pi));
    }
    const DensityMatrix rho = accumulate_density(states);
    REQUIRE(std::abs(rho.rho(0, 1)) < 0.02);
    REQUIRE(rho.rho(0, 0).real() == Approx(0.5).margin(1e-12));
    REQUIRE(rho.rho(1, 1).real() == Approx(0.5).margin(1e-12));
    REQUIRE(std::abs(rho.rho(2, 2)) == 0.0);
  }

  SECTION("parameter errors") {
    REQUIRE_THROWS_AS(accumulate_density(std::vector<EffectiveState>{}), parameter_error);
    std::vector<EffectiveState> mixed(2);
    mixed[0].c = Eigen::VectorXcd::Zero(4);
    mixed[0].c(0) = 1.0;
    mixed[1].c = Eigen::VectorXcd::Zero(4);
    mixed[1].c(0) = 1.0;
    mixed[1].t = 5.0;
    REQUIRE_THROWS_AS(accumulate_density(mixed), parameter_error);
    mixed[1].t = 0.0;
    mixed[1].c = Eigen::VectorXcd::Zero(2);
    mixed[1].c(0) = 1.0;
    REQUIRE_THROWS_AS(accumulate_density(mixed), parameter_error);
  }
}

TEST_CASE("purity of reference states", "[qlstate]") {
  DensityMatrix mixed{Eigen::MatrixXcd::Identity(4, 4) / 4.0};
  REQUIRE(purity(mixed) == 0.25);

  Eigen::VectorXcd c(4);
  c << 1.0, 0.0, 0.0, 0.0;
  DensityMatrix pure{c * c.adjoint()};
  REQUIRE(purity(pure) == Approx(1.0).margin(1e-15));

  Eigen::MatrixXcd half = Eigen::MatrixXcd::Zero(4, 4);
  half(0, 0) = 0.5;
  half(1, 1) = 0.5;
  DensityMatrix rank2{half};
  REQUIRE(purity(rank2) == Approx(0.5).margin(1e-15));
}

TEST_CASE("offdiag_series", "[qlstate]") {
  Eigen::VectorXcd c(4);
  c << complexd{0.5, 0.0}, complexd{0.5, 0.0}, complexd{0.5, 0.0}, complexd{0.5, 0.0};
  DensityMatrix rho{c * c.adjoint()};

  SECTION("a constant pure ensemble gives constant series") {
    std::vector<TimedDensity> seq{{0.0, rho}, {1.0, rho}, {2.0, rho}};
    const OffdiagSeries series = offdiag_series(seq);
    REQUIRE(series.t == std::vector<double>{0.0, 1.0, 2.0});
    for (const auto& s : series.offdiag_abs)
      for (double v : s) REQUIRE(v == Approx(0.25).margin(1e-15));
    for (std::size_t k = 0; k < series.t.size(); ++k) {
      double trace = 0.0;
      for (const auto& d : series.diag) trace += d[k];
      REQUIRE(trace == Approx(1.0).margin(1e-9));
    }
  }

  SECTION("input validation") {
    REQUIRE_THROWS_AS(offdiag_series(std::vector<TimedDensity>{}), parameter_error);
    DensityMatrix small{Eigen::MatrixXcd::Identity(2, 2) / 2.0};
    std::vector<TimedDensity> bad{{0.0, small}};
    REQUIRE_THROWS_AS(offdiag_series(bad), contract_error);
  }
}

TEST_CASE("density matrix invariants", "[qlstate][property]") {
  SECTION("a per-preparation global phase leaves rho unchanged") {
    Rng rng(5);
    const int m = 50;
    std::vector<EffectiveState> states(m), shifted(m);
    for (int j = 0; j < m; ++j) {
      Eigen::VectorXcd c(4);
      for (int k = 0; k < 4; ++k) c(k) = complexd{rng.normal(), rng.normal()};
      c.normalize();
      states[j].c = c;
      shifted[j].c = std::polar(1.0, rng.uniform_range(-pi, pi)) * c;
    }
    const DensityMatrix a = accumulate_density(states);
    const DensityMatrix b = accumulate_density(shifted);
    REQUIRE((a.rho - b.rho).cwiseAbs().maxCoeff() < 1e-14);
  }

  SECTION("the ensemble map is linear in the preparation sets") {
    Rng rng(6);
    auto random_states = [&](int m) {
      std::vector<EffectiveState> states(m);
      for (int j = 0; j < m; ++j) {
        Eigen::VectorXcd c(4);
        for (int k = 0; k < 4; ++k) c(k) = complexd{rng.normal(), rng.normal()};
        states[j].c = c.normalized();
      }
      return states;
    };
    const auto set_a = random_states(30);
    const auto set_b = random_states(50);
    std::vector<EffectiveState> all = set_a;
    all.insert(all.end(), set_b.begin(), set_b.end());
    const Eigen::MatrixXcd weighted = (30.0 * accumulate_density(set_a).rho +
                                       50.0 * accumulate_density(set_b).rho) /
                                      80.0;
    REQUIRE((accumulate_density(all).rho - weighted).cwiseAbs().maxCoeff() < 1e-14);
  }

  SECTION("purity stays inside [0.25, 1] for random ensembles") {
    Rng rng(7);
    for (int trial = 0; trial < 10; ++trial) {
      const int m = 1 + static_cast<int>(rng.uniform_int(40));
      std::vector<EffectiveState> states(m);
      for (int j = 0; j < m; ++j) {
        Eigen::VectorXcd c(4);
        for (int k = 0; k < 4; ++k) c(k) = complexd{rng.normal(), rng.normal()};
        states[j].c = c.normalized();
      }
      const double p = purity(accumulate_density(states));
      REQUIRE(p >= 0.25 - 1e-9);
      REQUIRE(p <= 1.0 + 1e-9);
    }
  }
}

TEST_CASE("phase-modulated reference equals the per-sample eigensolve", "[qlstate]") {
  // v' = Phi^{-1} v0 is the exact top eigenvector of the transformed
  // adjacency; the scenario hot path relies on this identity.
  const BiasedGraph p = desk_product(55);
  const EmergentState ref = emergent_eigenvector(p.adjacency);
  const EffectiveBasis basis = EffectiveBasis::from_graph(p);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Eigen::VectorXd theta = sample_initial_phases(p.n, PhaseInit{true, 0.0, 0.0}, seed);
    const EffectiveState fast = project_phase_modulated(theta, ref.vector, basis, 0.0);
    const Eigen::MatrixXcd a_prime = transform_adjacency(p, theta);
    const EmergentState solved = emergent_eigenvector(a_prime);
    const EffectiveState slow = project_effective(solved.vector, p);
    REQUIRE(std::abs(fast.residual - slow.residual) < 1e-9);
    const Eigen::MatrixXcd fast_rho = fast.c * fast.c.adjoint();
    const Eigen::MatrixXcd slow_rho = slow.c * slow.c.adjoint();
    REQUIRE((fast_rho - slow_rho).cwiseAbs().maxCoeff() < 1e-9);
  }
}
