#ifndef OFOGRID_RANDOM_HPP_
#define OFOGRID_RANDOM_HPP_

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <random>

namespace ofogrid {

/// mt19937_64 wrapper with hand-rolled distributions so that streams are
/// bit-identical across standard library implementations.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  /// Uniform in [0, 1).
  double uniform()
  {
    return (eng_() >> 11) * (1.0 / 9007199254740992.0);  // 53-bit mantissa
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (no state cached, one draw per call
  /// consumes two uniforms; keeps streams easy to reason about).
  double normal()
  {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  Eigen::VectorXd normal_vector(Eigen::Index n, double stddev)
  {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = stddev * normal();
    return v;
  }

  double lognormal(double sigma) { return std::exp(sigma * normal()); }

  std::uint64_t raw() { return eng_(); }

private:
  std::mt19937_64 eng_;
};

/// Stable stream derivation for parallel runs: seed ^ mixed(index).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index)
{
  std::uint64_t x = index + 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return base ^ x;
}

}  // namespace ofogrid

#endif  // OFOGRID_RANDOM_HPP_
