#ifndef OFOGRID_AGENT_HPP_
#define OFOGRID_AGENT_HPP_

#include "ofogrid/domain.hpp"

namespace ofogrid {

struct NoConvergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Primal/dual solution of one EV's charging problem
///   min  p'l + 0.01 l'l   s.t.  c'l = d,  0 <= l <= cap.
struct AgentSolution {
  Vec load;
  double eq_dual{0.0};  // multiplier of c'l = d
  Vec lower_duals;      // multipliers of l >= 0
  Vec upper_duals;      // multipliers of l <= cap
};

/// Exact solve via dual bisection: on the window, stationarity gives
/// l_j = clip((-p_j - lambda)/0.02, 0, cap_j); the scalar lambda is found
/// by bisection on the monotone window sum. Off-window entries are zero.
AgentSolution solve_ev_exact(const Vec& price, const EvSession& session);

struct PenaltyOptions {
  double rho_eq{1e6};
  double rho_ineq{1e6};
  double tol{1e-6};  // gradient infinity-norm stopping criterion
  int max_iter{100000};
};

/// Smooth-penalty variant: unconstrained minimization of
///   p'l + 0.01 l'l + rho_eq (c'l - d)^2
///     + rho_ineq (||max(0,-l)||^2 + ||max(0, l - cap)||^2)
/// by piecewise-Newton descent with backtracking. Throws NoConvergence past
/// the iteration cap.
Vec solve_ev_penalty(const Vec& price, const EvSession& session,
                     const PenaltyOptions& opts = {});

enum class AgentMode { Exact, Penalty };

/// Aggregate response of the whole fleet; sessions are independent and are
/// summed in index order for bitwise reproducibility.
Vec fleet_response(const Vec& price, const FleetScenario& scenario,
                   AgentMode mode = AgentMode::Exact,
                   const PenaltyOptions& penalty_opts = {},
                   int threads = 1);

/// As fleet_response but with per-session demand overrides (one noisy day).
Vec fleet_response_with_demands(const Vec& price, const FleetScenario& scenario,
                                const Vec& demands,
                                AgentMode mode = AgentMode::Exact,
                                int threads = 1);

struct FleetJacobian {
  Mat J;                 // d l_agg / d p
  bool degenerate{false};  // some entry within 1e-9 of a bound
};

/// Exact sensitivity by implicit differentiation of solve_ev_exact. On each
/// session's free set F the block is -(1/0.02)(I - 11'/|F|), zero elsewhere;
/// blocks are summed over sessions.
FleetJacobian fleet_jacobian(const Vec& price, const FleetScenario& scenario,
                             const Vec* demands = nullptr);

}  // namespace ofogrid

#endif  // OFOGRID_AGENT_HPP_
