#include "ofogrid/qp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <vector>

namespace ofogrid {

namespace {

double inf_norm(const Vec& v) { return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0; }

}  // namespace

QpResult solve_qp(const QpProblem& qp, const QpSettings& settings)
{
  const Eigen::Index n = qp.P.rows();
  const Eigen::Index m = qp.A.rows();

  QpResult res;
  res.x = Vec::Zero(n);
  res.y = Vec::Zero(m);
  Vec z = Vec::Zero(m);
  for (Eigen::Index i = 0; i < m; ++i)
    z[i] = std::clamp(0.0, qp.lo[i], qp.up[i]);

  double rho = settings.rho;
  Mat AtA = qp.A.transpose() * qp.A;
  Eigen::LDLT<Mat> kkt(qp.P + settings.sigma * Mat::Identity(n, n) + rho * AtA);

  const double ar = settings.over_relax;
  for (int it = 1; it <= settings.max_iter; ++it) {
    const Vec rhs = settings.sigma * res.x - qp.q + qp.A.transpose() * (rho * z - res.y);
    const Vec x_t = kkt.solve(rhs);
    const Vec z_t = qp.A * x_t;

    res.x = ar * x_t + (1.0 - ar) * res.x;
    const Vec z_pre = ar * z_t + (1.0 - ar) * z;
    z = (z_pre + res.y / rho).cwiseMax(qp.lo).cwiseMin(qp.up);
    res.y += rho * (z_pre - z);
    res.iters = it;

    if (it % settings.check_every == 0 || it == settings.max_iter) {
      const Vec ax = qp.A * res.x;
      const Vec px = qp.P * res.x;
      const Vec aty = qp.A.transpose() * res.y;
      res.prim_res = inf_norm(ax - z);
      res.dual_res = inf_norm(px + qp.q + aty);
      const double tol_p =
          settings.eps * (1.0 + std::max(inf_norm(ax), inf_norm(z)));
      const double tol_d =
          settings.eps *
          (1.0 + std::max({inf_norm(px), inf_norm(qp.q), inf_norm(aty)}));
      if (res.prim_res <= tol_p && res.dual_res <= tol_d) {
        res.converged = true;
        break;
      }
      if (settings.adaptive_rho) {
        const double ratio = (res.prim_res / tol_p) / std::max(res.dual_res / tol_d, 1e-12);
        const double rho_new = std::clamp(rho * std::sqrt(ratio), 1e-6, 1e6);
        if (rho_new > 5.0 * rho || rho_new < rho / 5.0) {
          rho = rho_new;
          kkt.compute(qp.P + settings.sigma * Mat::Identity(n, n) + rho * AtA);
        }
      }
    }
  }

  if (settings.polish && res.converged) {
    // Active rows from multipliers and near-tight constraints; solve the
    // reduced equality-constrained KKT system and keep it if it improves.
    const Vec ax = qp.A * res.x;
    std::vector<Eigen::Index> act;
    std::vector<double> bact;
    for (Eigen::Index i = 0; i < m; ++i) {
      const double near = 1e3 * settings.eps * (1.0 + std::abs(qp.up[i]) + std::abs(qp.lo[i]));
      if (res.y[i] < -settings.eps || ax[i] - qp.lo[i] < near) {
        act.push_back(i);
        bact.push_back(qp.lo[i]);
      } else if (res.y[i] > settings.eps || qp.up[i] - ax[i] < near) {
        act.push_back(i);
        bact.push_back(qp.up[i]);
      }
    }
    const Eigen::Index k = static_cast<Eigen::Index>(act.size());
    Mat kmat = Mat::Zero(n + k, n + k);
    kmat.topLeftCorner(n, n) = qp.P;
    Vec krhs(n + k);
    krhs.head(n) = -qp.q;
    for (Eigen::Index a = 0; a < k; ++a) {
      kmat.block(n + a, 0, 1, n) = qp.A.row(act[a]);
      kmat.block(0, n + a, n, 1) = qp.A.row(act[a]).transpose();
      krhs[n + a] = bact[a];
    }
    Eigen::PartialPivLU<Mat> lu(kmat);
    const Vec sol = lu.solve(krhs);
    if (sol.allFinite()) {
      Vec y_pol = Vec::Zero(m);
      for (Eigen::Index a = 0; a < k; ++a) y_pol[act[a]] = sol[n + a];
      const Vec x_pol = sol.head(n);
      if (qp_kkt_residual({qp.P, qp.q, qp.A, qp.lo, qp.up}, x_pol, y_pol) <
          qp_kkt_residual({qp.P, qp.q, qp.A, qp.lo, qp.up}, res.x, res.y)) {
        res.x = x_pol;
        res.y = y_pol;
        res.prim_res = inf_norm(qp.A * res.x - (qp.A * res.x).cwiseMax(qp.lo).cwiseMin(qp.up));
        res.dual_res = inf_norm(qp.P * res.x + qp.q + qp.A.transpose() * res.y);
      }
    }
  }
  return res;
}

double qp_kkt_residual(const QpProblem& qp, const Vec& x, const Vec& y)
{
  const Eigen::Index m = qp.A.rows();
  double r = inf_norm(qp.P * x + qp.q + qp.A.transpose() * y);
  const Vec ax = qp.A * x;
  for (Eigen::Index i = 0; i < m; ++i) {
    r = std::max(r, qp.lo[i] - ax[i]);
    r = std::max(r, ax[i] - qp.up[i]);
    if (y[i] > 0.0 && std::isfinite(qp.up[i]))
      r = std::max(r, y[i] * std::abs(qp.up[i] - ax[i]));
    if (y[i] < 0.0 && std::isfinite(qp.lo[i]))
      r = std::max(r, -y[i] * std::abs(ax[i] - qp.lo[i]));
  }
  return r;
}

}  // namespace ofogrid
