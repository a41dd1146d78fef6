#include "ofogrid/benchmark.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ofogrid {

namespace {

double objective_value(const Vec& p, const Vec& l, const DsoConfig& config,
                       const Vec& p_ref, bool abs_dev)
{
  const ObjectiveValue base = dso_objective(p, l, config, p_ref);
  if (!abs_dev) return base.value;
  const double dcost = (p - p_ref).dot(l);
  return base.peak_term + config.b * std::abs(dcost);
}

Vec objective_gradient(const FleetScenario& scenario, const Vec& p, const Vec& l,
                       const DsoConfig& config, const Vec& p_ref, bool abs_dev)
{
  DsoGradient g = dso_gradient(p, l, config, p_ref);
  if (abs_dev) {
    const double dcost = (p - p_ref).dot(l);
    const double sgn = dcost > 0.0 ? 1.0 : (dcost < 0.0 ? -1.0 : 0.0);
    // Replace the squared-deviation parts with the absolute-value variant.
    g.grad_p = config.b * sgn * l;
    g.grad_l -= 2.0 * config.b * dcost * (p - p_ref);
    g.grad_l += config.b * sgn * (p - p_ref);
  }
  const FleetJacobian jac = fleet_jacobian(p, scenario);
  return g.grad_p + jac.J.transpose() * g.grad_l;
}

}  // namespace

double reduced_objective(const FleetScenario& scenario, const Vec& p,
                         const DsoConfig& config, const Vec& p_ref, bool abs_dev)
{
  return objective_value(p, fleet_response(p, scenario), config, p_ref, abs_dev);
}

Vec reduced_gradient(const FleetScenario& scenario, const Vec& p,
                     const DsoConfig& config, const Vec& p_ref, bool abs_dev)
{
  return objective_gradient(scenario, p, fleet_response(p, scenario), config, p_ref,
                            abs_dev);
}

BenchmarkResult solve_benchmark(const FleetScenario& scenario, const Vec& p_ref,
                                const DsoConfig& config, int starts,
                                std::uint64_t seed, const BenchmarkOptions& opts)
{
  if (starts < 1) throw InvalidDomain("solve_benchmark: starts must be >= 1");
  const Eigen::Index n = p_ref.size();
  const Bounds& b = config.bounds;
  auto clip = [&](const Vec& p) { return p.cwiseMax(b.p_min).cwiseMin(b.p_max).eval(); };

  BenchmarkResult result;
  result.starts = starts;
  result.start_converged.assign(static_cast<std::size_t>(starts), false);
  double best_obj = std::numeric_limits<double>::infinity();

  Rng rng(seed);
  for (int s = 0; s < starts; ++s) {
    Vec p = p_ref;
    if (s > 0) p += rng.normal_vector(n, opts.start_sigma);
    p = clip(p);

    double alpha0 = opts.alpha0;
    {
      const Vec g0 = reduced_gradient(scenario, p, config, p_ref, opts.abs_deviation);
      const double gn = g0.lpNorm<Eigen::Infinity>();
      if (alpha0 <= 0.0) alpha0 = 0.05 * (b.p_max - b.p_min) / std::max(gn, 1e-12);
    }

    // Projected gradient descent with an adaptive Armijo line search; the
    // accepted step warm-starts the next trial. When every halving fails
    // (a kink of the max-mode objective) a diminishing subgradient step is
    // taken anyway, so the best iterate is tracked separately.
    double f = reduced_objective(scenario, p, config, p_ref, opts.abs_deviation);
    Vec p_best = p;
    double f_best = f;
    double eta_prev = alpha0;
    for (int t = 0; t < opts.max_iter; ++t) {
      const Vec l = fleet_response(p, scenario);
      const Vec g = objective_gradient(scenario, p, l, config, p_ref,
                                       opts.abs_deviation);
      double eta = std::min(2.0 * eta_prev, 1e6 * alpha0);

      Vec p_next;
      double f_next;
      bool accepted = false;
      for (int bt = 0; bt < 40; ++bt) {
        p_next = clip(p - eta * g);
        f_next =
            reduced_objective(scenario, p_next, config, p_ref, opts.abs_deviation);
        const double dec = (p_next - p).squaredNorm() / eta;
        if (f_next <= f - 1e-4 * dec) {
          accepted = true;
          break;
        }
        eta *= 0.5;
      }
      if (!accepted) {
        eta = alpha0 / static_cast<double>(t + 1);
        p_next = clip(p - eta * g);
        f_next =
            reduced_objective(scenario, p_next, config, p_ref, opts.abs_deviation);
      }
      eta_prev = eta;

      const double move = (p_next - p).lpNorm<Eigen::Infinity>();
      p = p_next;
      f = f_next;
      if (f < f_best) {
        f_best = f;
        p_best = p;
      }
      if (move < opts.tol) {
        result.start_converged[static_cast<std::size_t>(s)] = true;
        break;
      }
    }

    if (f_best < best_obj) {  // strict: ties break to the lowest start index
      best_obj = f_best;
      result.price = p_best;
      result.best_start_index = s;
    }
  }

  result.predicted_load = fleet_response(result.price, scenario,
                                         AgentMode::Exact, PenaltyOptions{},
                                         opts.threads);
  result.objective = objective_value(result.price, result.predicted_load, config,
                                     p_ref, opts.abs_deviation);
  return result;
}

DayRecord reference_baseline(const FleetScenario& scenario, const Vec& p_ref,
                             const DsoConfig& config)
{
  const Vec l = fleet_response(p_ref, scenario);
  DayRecord rec;
  rec.day = 0;
  rec.price = p_ref;
  rec.l_agg = l;
  const ObjectiveValue obj = dso_objective(p_ref, l, config, p_ref);
  rec.objective = obj.value;
  rec.peak_kw = scenario.sessions.empty() ? 0.0 : l.maxCoeff();
  rec.deviation_term = obj.deviation_term;
  rec.daily_cost = p_ref.dot(l);
  double td = 0.0;
  for (const auto& s : scenario.sessions) td += s.demand;
  rec.total_demand = td;
  return rec;
}

}  // namespace ofogrid
