#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ofogrid/benchmark.hpp"
#include "ofogrid/random.hpp"

#include <cmath>

using namespace ofogrid;

namespace {

FleetScenario tiny_fleet(int n, std::uint64_t seed, int count)
{
  FleetScenario sc = generate_workplace_fleet(count, make_time_grid(n, 1440 / n), seed);
  sc.demand_noise.sigma = 0.0;
  return sc;
}

Vec projected_gradient(const Vec& p, const Vec& g, const Bounds& b)
{
  Vec r = g;
  for (int i = 0; i < p.size(); ++i) {
    if (p[i] <= b.p_min + 1e-12 && g[i] > 0.0) r[i] = 0.0;
    if (p[i] >= b.p_max - 1e-12 && g[i] < 0.0) r[i] = 0.0;
  }
  return r;
}

}  // namespace

TEST_CASE("reduced gradient matches finite differences in smooth mode")
{
  const int n = 12;
  const FleetScenario sc = tiny_fleet(n, 5, 4);
  DsoConfig cfg;
  cfg.objective_mode = ObjectiveMode::Lse;
  const Vec p_ref = generate_reference_tariff(sc.grid);

  Rng rng(51);
  int tested = 0;
  for (int trial = 0; trial < 30 && tested < 8; ++trial) {
    Vec p = p_ref + rng.normal_vector(n, 0.03);
    p = p.cwiseMax(cfg.bounds.p_min).cwiseMin(cfg.bounds.p_max);
    if (fleet_jacobian(p, sc).degenerate) continue;

    const Vec g = reduced_gradient(sc, p, cfg, p_ref);
    const double h = 1e-4;
    bool safe = true;
    Vec fd(n);
    for (int k = 0; k < n; ++k) {
      Vec pp = p, pm = p;
      pp[k] += h;
      pm[k] -= h;
      if (fleet_jacobian(pp, sc).degenerate || fleet_jacobian(pm, sc).degenerate) {
        safe = false;
        break;
      }
      fd[k] = (reduced_objective(sc, pp, cfg, p_ref) -
               reduced_objective(sc, pm, cfg, p_ref)) /
              (2.0 * h);
    }
    if (!safe) continue;
    // The piecewise-linear response makes the chain rule exact between
    // active-set changes; a loose relative bound guards the stencil edges.
    CHECK((g - fd).lpNorm<Eigen::Infinity>() /
              std::max(1.0, fd.lpNorm<Eigen::Infinity>()) <= 1e-3);
    ++tested;
  }
  CHECK(tested >= 4);
}

TEST_CASE("benchmark price beats the reference tariff")
{
  const int n = 24;
  const FleetScenario sc = tiny_fleet(n, 6, 8);
  DsoConfig cfg;
  const Vec p_ref = generate_reference_tariff(sc.grid);

  const auto res = solve_benchmark(sc, p_ref, cfg, 1, 7);
  const double f_ref = reduced_objective(sc, p_ref, cfg, p_ref);
  CHECK(res.objective <= f_ref + 1e-9);
  CHECK(res.price.minCoeff() >= cfg.bounds.p_min - 1e-12);
  CHECK(res.price.maxCoeff() <= cfg.bounds.p_max + 1e-12);
  CHECK(res.predicted_load.maxCoeff() < fleet_response(p_ref, sc).maxCoeff());
}

TEST_CASE("single session with a four-step window flattens")
{
  FleetScenario sc;
  sc.grid = make_time_grid(4, 360);
  EvSession s;
  s.availability = IVec::Ones(4);
  s.power_cap = Vec::Constant(4, 11.0);
  s.demand = 20.0;
  sc.sessions.push_back(s);

  DsoConfig cfg;
  Vec p_ref(4);
  p_ref << 0.12, 0.25, 0.12, 0.28;

  const auto res = solve_benchmark(sc, p_ref, cfg, 3, 11);
  // The ideal flat profile loads 5 kW per step; peak must get close.
  CHECK(res.predicted_load.maxCoeff() <= 5.0 + 0.2);
  CHECK(res.predicted_load.sum() == doctest::Approx(20.0).epsilon(1e-9));
}

TEST_CASE("returned point is near-stationary in smooth mode")
{
  const int n = 12;
  const FleetScenario sc = tiny_fleet(n, 8, 4);
  DsoConfig cfg;
  cfg.objective_mode = ObjectiveMode::Lse;
  const Vec p_ref = generate_reference_tariff(sc.grid);

  BenchmarkOptions opts;
  opts.max_iter = 20000;
  opts.tol = 1e-9;
  const auto res = solve_benchmark(sc, p_ref, cfg, 2, 13, opts);
  const Vec g = reduced_gradient(sc, res.price, cfg, p_ref);
  const Vec pg = projected_gradient(res.price, g, cfg.bounds);
  CHECK(pg.lpNorm<Eigen::Infinity>() <= 1e-3);
}

TEST_CASE("multi-start never loses to the plain start")
{
  const int n = 12;
  const FleetScenario sc = tiny_fleet(n, 9, 5);
  DsoConfig cfg;
  const Vec p_ref = generate_reference_tariff(sc.grid);

  const auto one = solve_benchmark(sc, p_ref, cfg, 1, 17);
  const auto many = solve_benchmark(sc, p_ref, cfg, 5, 17);
  CHECK(many.objective <= one.objective + 1e-12);
  CHECK(many.starts == 5);
  CHECK(static_cast<int>(many.start_converged.size()) == 5);
}

TEST_CASE("absolute-deviation variant runs and stays finite")
{
  const int n = 12;
  const FleetScenario sc = tiny_fleet(n, 10, 4);
  DsoConfig cfg;
  const Vec p_ref = generate_reference_tariff(sc.grid);

  BenchmarkOptions opts;
  opts.abs_deviation = true;
  const auto res = solve_benchmark(sc, p_ref, cfg, 1, 19, opts);
  CHECK(std::isfinite(res.objective));
  CHECK(res.objective <= reduced_objective(sc, p_ref, cfg, p_ref, true) + 1e-9);
}

TEST_CASE("deterministic for a fixed seed")
{
  const int n = 12;
  const FleetScenario sc = tiny_fleet(n, 12, 4);
  DsoConfig cfg;
  const Vec p_ref = generate_reference_tariff(sc.grid);
  const auto a = solve_benchmark(sc, p_ref, cfg, 3, 23);
  const auto b = solve_benchmark(sc, p_ref, cfg, 3, 23);
  CHECK((a.price - b.price).norm() == 0.0);
  CHECK(a.objective == b.objective);
  CHECK(a.best_start_index == b.best_start_index);
}

TEST_CASE("reference baseline metrics")
{
  const int n = 24;
  const FleetScenario sc = tiny_fleet(n, 14, 6);
  DsoConfig cfg;
  const Vec p_ref = generate_reference_tariff(sc.grid);
  const auto rec = reference_baseline(sc, p_ref, cfg);
  const Vec l = fleet_response(p_ref, sc);
  CHECK(rec.peak_kw == doctest::Approx(l.maxCoeff()));
  CHECK(rec.daily_cost == doctest::Approx(p_ref.dot(l)));
  double td = 0.0;
  for (const auto& s : sc.sessions) td += s.demand;
  CHECK(rec.total_demand == doctest::Approx(td));
  CHECK(rec.l_agg.sum() == doctest::Approx(td).epsilon(1e-9));
}

TEST_CASE("invalid start count throws")
{
  const FleetScenario sc = tiny_fleet(12, 15, 2);
  DsoConfig cfg;
  CHECK_THROWS_AS(solve_benchmark(sc, generate_reference_tariff(sc.grid), cfg, 0, 1),
                  InvalidDomain);
}
