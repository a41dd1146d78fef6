#ifndef OFOGRID_QP_HPP_
#define OFOGRID_QP_HPP_

#include "ofogrid/domain.hpp"

namespace ofogrid {

/// Dense box-constrained quadratic program
///   min  1/2 x'Px + q'x   s.t.  lo <= Ax <= up.
struct QpProblem {
  Mat P;
  Vec q;
  Mat A;
  Vec lo;
  Vec up;
};

struct QpSettings {
  double rho{0.1};
  double sigma{1e-6};
  double over_relax{1.6};
  double eps{1e-9};     // absolute primal/dual residual tolerance
  int max_iter{20000};
  int check_every{25};
  bool adaptive_rho{true};
  bool polish{true};
};

struct QpResult {
  Vec x;
  Vec y;  // multipliers of lo <= Ax <= up (negative at lower, positive at upper)
  int iters{0};
  bool converged{false};
  double prim_res{0.0};
  double dual_res{0.0};
};

/// Operator-splitting (ADMM) solver with over-relaxation, adaptive penalty,
/// and an active-set polish step on convergence.
QpResult solve_qp(const QpProblem& qp, const QpSettings& settings = {});

/// Max KKT residual (stationarity, feasibility, complementarity) of a
/// candidate solution; used by tests and the controller's optimality check.
double qp_kkt_residual(const QpProblem& qp, const Vec& x, const Vec& y);

}  // namespace ofogrid

#endif  // OFOGRID_QP_HPP_
