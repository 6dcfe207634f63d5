#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include <qlsync/errors.hpp>

namespace qlsync {

inline constexpr double pi = 3.14159265358979323846;

/// splitmix64 finalizer, used to derive decorrelated sub-stream seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Named sub-streams of a realization seed. Realization r of an ensemble
/// uses base_seed + r; within a realization, independent draws come from
/// derive_seed(seed, stream).
enum class SeedStream : std::uint64_t {
  graph = 1,
  frequencies = 2,
  phases = 3,
  cross_edges = 4,
  lohe = 5,
};

inline std::uint64_t derive_seed(std::uint64_t base, SeedStream stream) {
  return mix_seed(base ^ (static_cast<std::uint64_t>(stream) * 0xA24BAED4963EE407ull));
}

/// Seeded generator with hand-rolled distributions.
///
/// The engine is mt19937_64, whose output sequence is fixed by the standard;
/// the distributions below avoid <random>'s implementation-defined ones so
/// that identical seeds give identical draws on every platform.
class Rng {
public:
  explicit Rng(std::uint64_t seed) { seed_engine(seed); }

  std::uint64_t next_u64() { return engine_next(); }

  /// Uniform double in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in (0, 1); never returns 0.
  double uniform_open() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform_range(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Unbiased integer in [0, n) via rejection.
  std::uint64_t uniform_int(std::uint64_t n) {
    if (n == 0) throw parameter_error("uniform_int: n must be positive");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  /// Standard normal draw (Box-Muller, no caching).
  double normal() {
    const double u1 = uniform_open();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * pi * u2);
  }

  /// Von Mises draw centered at mu with concentration kappa,
  /// returned in [mu - pi, mu + pi]. Best-Fisher rejection sampling.
  double von_mises(double mu, double kappa) {
    if (!(kappa >= 0.0)) throw parameter_error("von_mises: kappa must be >= 0");
    if (kappa < 1e-9) return mu + uniform_range(-pi, pi);

    const double s = 0.5 / kappa;
    const double r = s + std::sqrt(1.0 + s * s);
    for (int attempt = 0; attempt < 100000; ++attempt) {
      const double z = std::cos(pi * uniform());
      double f = (1.0 + r * z) / (r + z);
      if (f > 1.0) f = 1.0;
      if (f < -1.0) f = -1.0;
      const double c = kappa * (r - f);
      const double u2 = uniform_open();
      if (c * (2.0 - c) - u2 > 0.0 || std::log(c / u2) + 1.0 - c >= 0.0) {
        const double theta = std::acos(f);
        return mu + (uniform() > 0.5 ? theta : -theta);
      }
    }
    throw numeric_error("von_mises: rejection sampling did not terminate");
  }

  /// Fisher-Yates shuffle using uniform_int, independent of std::shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

private:
  void seed_engine(std::uint64_t seed);
  std::uint64_t engine_next();
  std::vector<std::uint64_t> mt_;
  std::size_t mti_ = 0;
};

// Minimal mt19937-64 core (Matsumoto & Nishimura reference constants).
inline void Rng::seed_engine(std::uint64_t seed) {
  mt_.assign(312, 0);
  mt_[0] = seed;
  for (std::size_t i = 1; i < 312; ++i)
    mt_[i] = 6364136223846793005ull * (mt_[i - 1] ^ (mt_[i - 1] >> 62)) + i;
  mti_ = 312;
}

inline std::uint64_t Rng::engine_next() {
  constexpr std::uint64_t kUpper = 0xFFFFFFFF80000000ull;
  constexpr std::uint64_t kLower = 0x7FFFFFFFull;
  if (mti_ >= 312) {
    for (std::size_t i = 0; i < 312; ++i) {
      const std::uint64_t x = (mt_[i] & kUpper) | (mt_[(i + 1) % 312] & kLower);
      mt_[i] = mt_[(i + 156) % 312] ^ (x >> 1);
      if (x & 1ull) mt_[i] ^= 0xB5026F5AA96619E9ull;
    }
    mti_ = 0;
  }
  std::uint64_t y = mt_[mti_++];
  y ^= (y >> 29) & 0x5555555555555555ull;
  y ^= (y << 17) & 0x71D67FFFEDA60000ull;
  y ^= (y << 37) & 0xFFF7EEE000000000ull;
  y ^= y >> 43;
  return y;
}

/// I1(x)/I0(x), the mean resultant length of a von Mises distribution.
/// Continued fraction for moderate x, asymptotic series for large x.
inline double bessel_ratio_i1_i0(double x) {
  if (x <= 0.0) return 0.0;
  if (x > 200.0) {
    // R ~ 1 - 1/(2x) - 1/(8x^2) - 1/(8x^3) - 25/(128x^4)
    const double ix = 1.0 / x;
    return 1.0 - ix * (0.5 + ix * (0.125 + ix * (0.125 + ix * (25.0 / 128.0))));
  }
  // Modified Lentz on I1/I0 = 1/(2/x + 1/(4/x + 1/(6/x + ...)))
  const double tiny = 1e-300;
  double f = tiny, c = tiny, d = 0.0;
  for (int k = 1; k < 2000; ++k) {
    const double b = 2.0 * k / x;
    d = b + d;
    if (d == 0.0) d = tiny;
    c = b + 1.0 / c;
    if (c == 0.0) c = tiny;
    d = 1.0 / d;
    const double delta = c * d;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-15) return f;
  }
  throw numeric_error("bessel_ratio_i1_i0: continued fraction did not converge");
}

/// Solve sigma_c = sqrt(-2 ln R(kappa)) for kappa given the circular
/// standard deviation sigma_c > 0.
inline double vonmises_kappa_from_circ_std(double sigma_c) {
  if (!(sigma_c > 0.0))
    throw parameter_error("vonmises_kappa_from_circ_std: sigma_c must be > 0");
  const double target = std::exp(-0.5 * sigma_c * sigma_c);
  if (target >= 1.0 - 1e-12) {
    // deep in the asymptotic regime: R ~ 1 - 1/(2k) => k ~ 1/(2(1-R)) ~ 1/sigma_c^2
    return 1.0 / (sigma_c * sigma_c);
  }
  // Banerjee et al. initial guess, then Newton on R(kappa) - target.
  double kappa;
  const double R = target;
  if (R < 0.53)
    kappa = 2.0 * R + R * R * R + 5.0 * R * R * R * R * R / 6.0;
  else if (R < 0.85)
    kappa = -0.4 + 1.39 * R + 0.43 / (1.0 - R);
  else
    kappa = 1.0 / (R * R * R - 4.0 * R * R + 3.0 * R);
  for (int it = 0; it < 100; ++it) {
    const double r = bessel_ratio_i1_i0(kappa);
    const double deriv = 1.0 - r * r - r / kappa;
    const double step = (r - target) / deriv;
    kappa -= step;
    if (kappa <= 0.0) kappa = 1e-8;
    if (std::abs(step) <= 1e-12 * std::max(1.0, kappa)) return kappa;
  }
  throw numeric_error("vonmises_kappa_from_circ_std: Newton iteration did not converge");
}

/// Circular standard deviation of a sample of angles.
inline double circular_std(const std::vector<double>& theta) {
  double cs = 0.0, sn = 0.0;
  for (double t : theta) {
    cs += std::cos(t);
    sn += std::sin(t);
  }
  const double n = static_cast<double>(theta.size());
  const double R = std::sqrt(cs * cs + sn * sn) / n;
  if (R <= 0.0) return std::numeric_limits<double>::infinity();
  return std::sqrt(-2.0 * std::log(R));
}

} // namespace qlsync
