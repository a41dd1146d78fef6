#include "ofogrid/agent.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <thread>

namespace ofogrid {

namespace {

constexpr double kCurv = 0.02;  // stationarity coefficient, 2 x 0.01

double window_sum(const Vec& price, const Vec& cap, const std::vector<int>& w,
                  double lambda)
{
  double s = 0.0;
  for (int j : w)
    s += std::clamp((-price[j] - lambda) / kCurv, 0.0, cap[j]);
  return s;
}

}  // namespace

AgentSolution solve_ev_exact(const Vec& price, const EvSession& session)
{
  if (!price.allFinite()) throw NonFiniteInput("solve_ev_exact: non-finite price");
  const int n = static_cast<int>(price.size());

  AgentSolution sol;
  sol.load = Vec::Zero(n);
  sol.lower_duals = Vec::Zero(n);
  sol.upper_duals = Vec::Zero(n);

  const auto w = session.window();
  const double cap_sum = session.window_cap_sum();
  if (session.demand > cap_sum + 1e-9 * std::max(1.0, session.demand))
    throw InfeasibleSession("demand exceeds window cap sum");

  double lambda = 0.0;
  if (w.empty() || session.demand <= 0.0) {
    // c'l = 0 with l >= 0 forces l = 0 on the window.
    lambda = 0.0;
    for (int j : w) lambda = std::max(lambda, -price[j]);
  } else {
    // Bracket guaranteed to contain the root; expand geometrically if not.
    double pmax = price.maxCoeff();
    double capmax = 0.0;
    for (int j : w) capmax = std::max(capmax, session.power_cap[j]);
    double lo = -pmax - kCurv * capmax - 1.0;  // S(lo) = cap_sum >= d
    double hi = pmax + 1.0;                    // S(hi) = 0 <= d
    while (window_sum(price, session.power_cap, w, lo) < session.demand)
      lo = 2.0 * lo - 1.0;
    while (window_sum(price, session.power_cap, w, hi) > session.demand)
      hi = 2.0 * hi + 1.0;

    const double tol = 1e-10 * std::max(1.0, session.demand);
    double s_lo = window_sum(price, session.power_cap, w, lo);
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double s_mid = window_sum(price, session.power_cap, w, mid);
      if (s_mid > s_lo + 1e-12)
        throw std::logic_error("dual map not nonincreasing");
      if (s_mid >= session.demand) {
        lo = mid;
        s_lo = s_mid;
      } else {
        hi = mid;
      }
      if (std::abs(s_mid - session.demand) <= tol && hi - lo < 1e-14 * (1.0 + std::abs(mid)))
        break;
    }
    lambda = 0.5 * (lo + hi);
  }

  for (int j : w)
    sol.load[j] = std::clamp((-price[j] - lambda) / kCurv, 0.0, session.power_cap[j]);

  // Snap the equality constraint by spreading the residual over the free set,
  // then recover lambda from stationarity on that set.
  std::vector<int> free_set;
  for (int j : w) {
    const double margin = 1e-9 * std::max(1.0, session.power_cap[j]);
    if (sol.load[j] > margin && sol.load[j] < session.power_cap[j] - margin)
      free_set.push_back(j);
  }
  if (!free_set.empty() && session.demand > 0.0) {
    double resid = session.demand;
    for (int j : w) resid -= sol.load[j];
    const double per = resid / static_cast<double>(free_set.size());
    for (int j : free_set) sol.load[j] += per;
    double acc = 0.0;
    for (int j : free_set) acc += -price[j] - kCurv * sol.load[j];
    lambda = acc / static_cast<double>(free_set.size());
  }
  sol.eq_dual = lambda;

  // Duals from the KKT block: p_j + 0.02 l_j + lambda - mu_j + gamma_j = 0
  // on the window; off-window entries sit at l = 0 with cap possibly 0.
  for (int j = 0; j < n; ++j) {
    if (session.availability[j] == 1) {
      const double margin = 1e-9 * std::max(1.0, session.power_cap[j]);
      if (sol.load[j] <= margin)
        sol.lower_duals[j] = std::max(0.0, price[j] + kCurv * sol.load[j] + lambda);
      else if (sol.load[j] >= session.power_cap[j] - margin)
        sol.upper_duals[j] = std::max(0.0, -(price[j] + kCurv * sol.load[j] + lambda));
    } else {
      sol.lower_duals[j] = std::max(0.0, price[j]);
      sol.upper_duals[j] = std::max(0.0, -price[j]);
    }
  }
  return sol;
}

Vec solve_ev_penalty(const Vec& price, const EvSession& session,
                     const PenaltyOptions& opts)
{
  if (!price.allFinite()) throw NonFiniteInput("solve_ev_penalty: non-finite price");
  if (opts.rho_eq <= 0.0 || opts.rho_ineq <= 0.0)
    throw InvalidDomain("penalty weights must be positive");
  const int n = static_cast<int>(price.size());
  const auto w = session.window();

  Vec c = Vec::Zero(n);
  for (int j : w) c[j] = 1.0;

  auto value = [&](const Vec& l) {
    const double eq = c.dot(l) - session.demand;
    double pen = opts.rho_eq * eq * eq;
    for (int j = 0; j < n; ++j) {
      const double lo = std::max(0.0, -l[j]);
      const double hi = std::max(0.0, l[j] - session.power_cap[j]);
      pen += opts.rho_ineq * (lo * lo + hi * hi);
    }
    return price.dot(l) + 0.01 * l.squaredNorm() + pen;
  };
  auto gradient = [&](const Vec& l) {
    Vec g = price + kCurv * l + (2.0 * opts.rho_eq * (c.dot(l) - session.demand)) * c;
    for (int j = 0; j < n; ++j) {
      g[j] -= 2.0 * opts.rho_ineq * std::max(0.0, -l[j]);
      g[j] += 2.0 * opts.rho_ineq * std::max(0.0, l[j] - session.power_cap[j]);
    }
    return g;
  };

  // Feasible-ish start: equal split of demand over the window.
  Vec l = Vec::Zero(n);
  if (!w.empty())
    for (int j : w) l[j] = session.demand / static_cast<double>(w.size());

  // Piecewise-Newton descent with Armijo backtracking. The objective is
  // piecewise quadratic with condition number ~ rho / 0.02, which defeats
  // first-order steps; the Hessian of the current activity pattern is cheap
  // and, once that pattern settles, one Newton step lands on the minimizer.
  double f = value(l);
  for (int it = 0; it < opts.max_iter; ++it) {
    const Vec g = gradient(l);
    if (g.lpNorm<Eigen::Infinity>() < opts.tol) return l;

    Mat H = kCurv * Mat::Identity(n, n) + (2.0 * opts.rho_eq) * c * c.transpose();
    for (int j = 0; j < n; ++j)
      if (l[j] < 0.0 || l[j] > session.power_cap[j]) H(j, j) += 2.0 * opts.rho_ineq;
    const Vec d = -H.ldlt().solve(g);

    const double gd = g.dot(d);  // < 0 since H is positive definite
    const double slack = 1e-12 * (1.0 + std::abs(f));
    double alpha = 1.0;
    Vec l_try;
    double f_try;
    for (int bt = 0;; ++bt) {
      l_try = l + alpha * d;
      f_try = value(l_try);
      if (f_try <= f + 1e-4 * alpha * gd + slack || bt >= 60) break;
      alpha *= 0.5;
    }
    l = l_try;
    f = f_try;
  }
  throw NoConvergence("solve_ev_penalty: iteration cap exceeded");
}

namespace {

Vec fleet_sum(const Vec& price, const FleetScenario& scenario, const Vec* demands,
              AgentMode mode, const PenaltyOptions& popts, int threads)
{
  const int n = scenario.grid.steps_per_day;
  const std::size_t m = scenario.sessions.size();
  std::vector<Vec> loads(m);

  auto solve_one = [&](std::size_t i) {
    EvSession s = scenario.sessions[i];
    if (demands != nullptr) s.demand = (*demands)[static_cast<Eigen::Index>(i)];
    try {
      if (mode == AgentMode::Exact)
        loads[i] = solve_ev_exact(price, s).load;
      else
        loads[i] = solve_ev_penalty(price, s, popts);
    } catch (const std::exception& e) {
      throw std::runtime_error("session " + std::to_string(i) + ": " + e.what());
    }
  };

  if (threads <= 1 || m < 2) {
    for (std::size_t i = 0; i < m; ++i) solve_one(i);
  } else {
    const int nt = std::min<int>(threads, static_cast<int>(m));
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errs(nt);
    for (int t = 0; t < nt; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (std::size_t i = t; i < m; i += nt) solve_one(i);
        } catch (...) {
          errs[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errs)
      if (e) std::rethrow_exception(e);
  }

  // Fixed summation order keeps results bitwise reproducible.
  Vec agg = Vec::Zero(n);
  for (std::size_t i = 0; i < m; ++i) agg += loads[i];
  return agg;
}

}  // namespace

Vec fleet_response(const Vec& price, const FleetScenario& scenario, AgentMode mode,
                   const PenaltyOptions& penalty_opts, int threads)
{
  return fleet_sum(price, scenario, nullptr, mode, penalty_opts, threads);
}

Vec fleet_response_with_demands(const Vec& price, const FleetScenario& scenario,
                                const Vec& demands, AgentMode mode, int threads)
{
  return fleet_sum(price, scenario, &demands, mode, PenaltyOptions{}, threads);
}

FleetJacobian fleet_jacobian(const Vec& price, const FleetScenario& scenario,
                             const Vec* demands)
{
  const int n = scenario.grid.steps_per_day;
  FleetJacobian out;
  out.J = Mat::Zero(n, n);

  for (std::size_t i = 0; i < scenario.sessions.size(); ++i) {
    EvSession s = scenario.sessions[i];
    if (demands != nullptr) s.demand = (*demands)[static_cast<Eigen::Index>(i)];
    const AgentSolution sol = solve_ev_exact(price, s);

    std::vector<int> free_set;
    for (int j : s.window()) {
      // Unclipped stationary value decides the active set; entries within
      // 1e-9 of a bound are treated as clipped (one-sided derivative) and
      // flagged as degenerate.
      const double u = (-price[j] - sol.eq_dual) / kCurv;
      if (std::abs(u) <= 1e-9 || std::abs(u - s.power_cap[j]) <= 1e-9) {
        out.degenerate = true;
        continue;
      }
      if (u > 0.0 && u < s.power_cap[j]) free_set.push_back(j);
    }
    if (free_set.empty()) continue;
    const double inv = 1.0 / static_cast<double>(free_set.size());
    for (int a : free_set)
      for (int b : free_set)
        out.J(a, b) += -(1.0 / kCurv) * ((a == b ? 1.0 : 0.0) - inv);
  }
  return out;
}

}  // namespace ofogrid
