#include "ofogrid/sensitivity.hpp"

#include "ofogrid/random.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>

namespace ofogrid {

SensitivityEstimate::SensitivityEstimate(Mat h0, double sigma0, double sigma_m,
                                         double sigma_p, CovarianceMode mode)
{
  if (!h0.allFinite()) throw InvalidDomain("SensitivityEstimate: non-finite H0");
  if (h0.rows() != h0.cols()) throw InvalidDomain("SensitivityEstimate: H0 not square");
  const Eigen::Index n = h0.rows();
  h_ = std::move(h0);
  sigma_m_ = sigma_m;
  sigma_p_ = sigma_p;
  mode_ = mode;
  if (mode == CovarianceMode::Factored)
    cov_ = sigma0 * Mat::Identity(n, n);
  else
    cov_ = sigma0 * Mat::Identity(n * n, n * n);
}

SensitivityEstimate kalman_update(const SensitivityEstimate& est, const Vec& dp,
                                  const Vec& dl)
{
  if (!dp.allFinite() || !dl.allFinite())
    throw NonFiniteInput("kalman_update: non-finite innovation data");
  const Eigen::Index n = est.h_.rows();
  if (dp.size() != n || dl.size() != n)
    throw InvalidDomain("kalman_update: dimension mismatch");

  SensitivityEstimate out = est;
  const bool excited = dp.lpNorm<Eigen::Infinity>() > 0.0;

  if (est.mode_ == CovarianceMode::Factored) {
    if (excited) {
      const Vec a_dp = est.cov_ * dp;
      const double innov = est.sigma_m_ + dp.dot(a_dp);
      if (innov <= 0.0)
        throw NumericBreakdown("kalman_update: nonpositive innovation scalar");
      out.h_ = est.h_ + (dl - est.h_ * dp) * (a_dp.transpose() / innov);
      out.cov_ = est.cov_ - (a_dp * a_dp.transpose()) / innov;
    }
    out.cov_ += est.sigma_p_ * Mat::Identity(n, n);
    out.cov_ = 0.5 * (out.cov_ + out.cov_.transpose().eval());
  } else {
    const Eigen::Index n2 = n * n;
    if (excited) {
      // P = dp' (x) I, so P vec(H) = H dp (column-major vec).
      Mat P = Mat::Zero(n, n2);
      for (Eigen::Index k = 0; k < n; ++k)
        P.block(0, k * n, n, n) = dp[k] * Mat::Identity(n, n);

      const Mat SPt = est.cov_ * P.transpose();
      Mat innov = P * SPt;
      innov.diagonal().array() += est.sigma_m_;
      const Mat K = SPt * innov.ldlt().solve(Mat::Identity(n, n));

      Eigen::Map<const Vec> s(est.h_.data(), n2);
      const Vec s_next = s + K * (dl - P * s);
      out.h_ = Eigen::Map<const Mat>(s_next.data(), n, n);
      out.cov_ = (Mat::Identity(n2, n2) - K * P) * est.cov_;
    }
    out.cov_.diagonal().array() += est.sigma_p_;
    out.cov_ = 0.5 * (out.cov_ + out.cov_.transpose().eval());
  }
  return out;
}

Mat warm_start(const Mat& dp_hist, const Mat& dl_hist, double ridge)
{
  if (dp_hist.rows() < 1 || dl_hist.rows() != dp_hist.rows())
    throw InsufficientData("warm_start: need at least one aligned history row");
  const Eigen::Index n = dp_hist.cols();

  Mat gram = dp_hist.transpose() * dp_hist;
  if (ridge < 0.0) ridge = 1e-8 * gram.trace() / static_cast<double>(n);
  ridge = std::max(ridge, 1e-30);  // keeps zero-excitation histories solvable
  gram.diagonal().array() += ridge;
  const Mat x = gram.ldlt().solve(dp_hist.transpose() * dl_hist);
  return x.transpose();
}

std::pair<Mat, Mat> collect_warmstart_history(const FleetScenario& scenario,
                                              const Vec& p_ref, const Bounds& bounds,
                                              double sigma, int days,
                                              std::uint64_t seed)
{
  if (days < 2) throw InsufficientData("collect_warmstart_history: days must be >= 2");
  const int n = scenario.grid.steps_per_day;
  Rng rng(seed);

  Mat prices(days, n), loads(days, n);
  for (int d = 0; d < days; ++d) {
    Vec p = p_ref + rng.normal_vector(n, sigma);
    p = p.cwiseMax(bounds.p_min).cwiseMin(bounds.p_max);
    prices.row(d) = p.transpose();
    loads.row(d) = fleet_response(p, scenario).transpose();
  }
  Mat dp = prices.bottomRows(days - 1) - prices.topRows(days - 1);
  Mat dl = loads.bottomRows(days - 1) - loads.topRows(days - 1);
  return {std::move(dp), std::move(dl)};
}

}  // namespace ofogrid
