#ifndef OFOGRID_BENCHMARK_HPP_
#define OFOGRID_BENCHMARK_HPP_

#include "ofogrid/simkit.hpp"

namespace ofogrid {

struct BenchmarkResult {
  Vec price;
  Vec predicted_load;  // fleet_response(price), recomputed on return
  double objective{0.0};
  int starts{1};
  int best_start_index{0};
  std::vector<bool> start_converged;
};

struct BenchmarkOptions {
  int max_iter{10000};
  double tol{1e-7};        // infinity-norm stop on the price step
  double alpha0{-1.0};     // <= 0: auto-scale from the initial gradient
  double start_sigma{0.02};
  bool abs_deviation{false};  // b|dcost| instead of b dcost^2
  int threads{1};
};

/// Full-information offline benchmark: multi-start projected gradient
/// descent on the reduced objective using the exact fleet Jacobian for the
/// chain rule. Certifies stationarity, not global optimality.
BenchmarkResult solve_benchmark(const FleetScenario& scenario, const Vec& p_ref,
                                const DsoConfig& config, int starts,
                                std::uint64_t seed,
                                const BenchmarkOptions& opts = {});

/// Fleet response and metrics at the fixed reference tariff (nominal
/// demands, no noise).
DayRecord reference_baseline(const FleetScenario& scenario, const Vec& p_ref,
                             const DsoConfig& config);

/// Reduced objective Phi(p) = dso_objective(p, fleet_response(p)); exposed
/// for tests of the chain rule and stationarity.
double reduced_objective(const FleetScenario& scenario, const Vec& p,
                         const DsoConfig& config, const Vec& p_ref,
                         bool abs_deviation = false);
Vec reduced_gradient(const FleetScenario& scenario, const Vec& p,
                     const DsoConfig& config, const Vec& p_ref,
                     bool abs_deviation = false);

}  // namespace ofogrid

#endif  // OFOGRID_BENCHMARK_HPP_
