#ifndef OFOGRID_CONTROLLER_HPP_
#define OFOGRID_CONTROLLER_HPP_

#include "ofogrid/domain.hpp"
#include "ofogrid/qp.hpp"
#include "ofogrid/random.hpp"

namespace ofogrid {

enum class ObjectiveMode { Max, Lse };

struct StepSchedule {
  enum class Kind { Constant, Decay } kind{Kind::Constant};
  double alpha0{5e-5};
};

/// alpha (constant) or alpha0/(t+1) (Robbins-Monro decay).
double step_size(const StepSchedule& schedule, int t);

struct DsoConfig {
  double b{0.0002};       // cost-deviation weight
  Bounds bounds{};
  StepSchedule alpha{};
  double sigma_u{0.0};    // excitation std; 0 disables
  double tau{10.0};       // LSE temperature
  ObjectiveMode objective_mode{ObjectiveMode::Max};
  bool mask_enabled{true};
  double qp_tol{1e-9};
  int qp_max_iter{20000};
};

struct ObjectiveValue {
  double value{0.0};
  double peak_term{0.0};
  double deviation_term{0.0};
};

/// DSO objective: peak term (max, or stable unnormalized log-sum-exp of
/// tau*l) plus b * (p'l - p_ref'l)^2. Returns the decomposition for tracing.
ObjectiveValue dso_objective(const Vec& p, const Vec& l_agg, const DsoConfig& config,
                             const Vec& p_ref);

struct DsoGradient {
  Vec grad_p;
  Vec grad_l;
};

/// Partial gradients of the objective. Max mode uses the lowest-index
/// active-maximum subgradient.
DsoGradient dso_gradient(const Vec& p, const Vec& l_agg, const DsoConfig& config,
                         const Vec& p_ref);

/// mask_i = 1 iff l_agg_i > threshold.
IVec event_mask(const Vec& l_agg, double threshold = 0.0);

struct LopResult {
  Vec w;
  Vec p_next;
  bool qp_converged{true};
  bool softened{false};  // load rows relaxed via penalized slack
};

/// One controller step: solve
///   min_w ||w + (grad_p + H' grad_l)||^2
///   s.t.  p_min <= p + alpha w <= p_max,  0 <= l_agg + alpha H w <= l_max
/// then p_next = clip(p + alpha (mask . w) + omega_u). Infeasible load rows
/// at the linearization point are softened with a slack penalized at 1e6.
LopResult lop_step(const Vec& p, const Vec& l_agg, const Mat& H,
                   const DsoGradient& grad, const DsoConfig& config, double alpha,
                   const IVec& mask, Rng& rng);

}  // namespace ofogrid

#endif  // OFOGRID_CONTROLLER_HPP_
