#include "ofogrid/controller.hpp"

#include <cmath>

namespace ofogrid {

double step_size(const StepSchedule& schedule, int t)
{
  if (t < 0) throw InvalidDomain("step_size: t must be >= 0");
  if (schedule.kind == StepSchedule::Kind::Constant) return schedule.alpha0;
  return schedule.alpha0 / static_cast<double>(t + 1);
}

ObjectiveValue dso_objective(const Vec& p, const Vec& l_agg, const DsoConfig& config,
                             const Vec& p_ref)
{
  ObjectiveValue out;
  if (config.objective_mode == ObjectiveMode::Max) {
    out.peak_term = l_agg.maxCoeff();
  } else {
    // Unnormalized LSE approximates tau * max; max-shifted for stability.
    const double m = config.tau * l_agg.maxCoeff();
    out.peak_term = m + std::log(((config.tau * l_agg).array() - m).exp().sum());
  }
  const double dcost = (p - p_ref).dot(l_agg);
  out.deviation_term = config.b * dcost * dcost;
  out.value = out.peak_term + out.deviation_term;
  return out;
}

DsoGradient dso_gradient(const Vec& p, const Vec& l_agg, const DsoConfig& config,
                         const Vec& p_ref)
{
  const Eigen::Index n = p.size();
  const double dcost = (p - p_ref).dot(l_agg);

  DsoGradient g;
  g.grad_p = 2.0 * config.b * dcost * l_agg;
  if (config.objective_mode == ObjectiveMode::Max) {
    Eigen::Index imax = 0;
    l_agg.maxCoeff(&imax);  // ties resolve to the lowest index
    g.grad_l = Vec::Zero(n);
    g.grad_l[imax] = 1.0;
  } else {
    const double m = config.tau * l_agg.maxCoeff();
    Vec e = ((config.tau * l_agg).array() - m).exp();
    g.grad_l = config.tau * e / e.sum();
  }
  g.grad_l += 2.0 * config.b * dcost * (p - p_ref);
  return g;
}

IVec event_mask(const Vec& l_agg, double threshold)
{
  if (threshold < 0.0) throw InvalidDomain("event_mask: threshold must be >= 0");
  IVec mask(l_agg.size());
  for (Eigen::Index i = 0; i < l_agg.size(); ++i)
    mask[i] = l_agg[i] > threshold ? 1 : 0;
  return mask;
}

LopResult lop_step(const Vec& p, const Vec& l_agg, const Mat& H,
                   const DsoGradient& grad, const DsoConfig& config, double alpha,
                   const IVec& mask, Rng& rng)
{
  if (!H.allFinite()) throw NonFiniteInput("lop_step: non-finite H");
  const Eigen::Index n = p.size();
  const Vec w_ideal = -(grad.grad_p + H.transpose() * grad.grad_l);

  LopResult out;
  out.softened = (l_agg.minCoeff() < -1e-9) ||
                 (l_agg.maxCoeff() > config.bounds.l_max + 1e-9);

  QpProblem qp;
  if (!out.softened) {
    qp.P = Mat::Identity(n, n);
    qp.q = -w_ideal;
    qp.A.resize(2 * n, n);
    qp.A.topRows(n) = alpha * Mat::Identity(n, n);
    qp.A.bottomRows(n) = alpha * H;
    qp.lo.resize(2 * n);
    qp.up.resize(2 * n);
    qp.lo.head(n) = Vec::Constant(n, config.bounds.p_min) - p;
    qp.up.head(n) = Vec::Constant(n, config.bounds.p_max) - p;
    qp.lo.tail(n) = -l_agg;
    qp.up.tail(n) = Vec::Constant(n, config.bounds.l_max) - l_agg;
  } else {
    // Measured load already violates its box: add a slack on the load rows,
    // penalized at 1e6, so the QP stays solvable.
    qp.P = Mat::Zero(2 * n, 2 * n);
    qp.P.topLeftCorner(n, n) = Mat::Identity(n, n);
    qp.P.bottomRightCorner(n, n) = 2e6 * Mat::Identity(n, n);
    qp.q = Vec::Zero(2 * n);
    qp.q.head(n) = -w_ideal;
    qp.A = Mat::Zero(2 * n, 2 * n);
    qp.A.topLeftCorner(n, n) = alpha * Mat::Identity(n, n);
    qp.A.bottomLeftCorner(n, n) = alpha * H;
    qp.A.bottomRightCorner(n, n) = Mat::Identity(n, n);
    qp.lo.resize(2 * n);
    qp.up.resize(2 * n);
    qp.lo.head(n) = Vec::Constant(n, config.bounds.p_min) - p;
    qp.up.head(n) = Vec::Constant(n, config.bounds.p_max) - p;
    qp.lo.tail(n) = -l_agg;
    qp.up.tail(n) = Vec::Constant(n, config.bounds.l_max) - l_agg;
  }

  QpSettings settings;
  settings.eps = config.qp_tol;
  settings.max_iter = config.qp_max_iter;
  const QpResult qr = solve_qp(qp, settings);
  out.qp_converged = qr.converged;
  out.w = qr.x.head(n);

  // Excitation is added before the final hard box projection.
  Vec step = Vec::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i)
    if (mask[i] == 1) step[i] = alpha * out.w[i];
  const Vec omega = rng.normal_vector(n, config.sigma_u);
  out.p_next =
      (p + step + omega).cwiseMax(config.bounds.p_min).cwiseMin(config.bounds.p_max);
  return out;
}

}  // namespace ofogrid
