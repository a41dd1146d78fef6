#ifndef OFOGRID_SENSITIVITY_HPP_
#define OFOGRID_SENSITIVITY_HPP_

#include "ofogrid/agent.hpp"
#include "ofogrid/domain.hpp"

#include <cstdint>
#include <utility>

namespace ofogrid {

struct InsufficientData : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericBreakdown : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class CovarianceMode {
  Factored,  // covariance = A (x) I with A an n x n factor (default)
  Full,      // literal n^2 x n^2 covariance; test oracle for small n
};

/// Learned price->aggregate-load Jacobian H with its uncertainty state.
/// Values are immutable; updates return new estimates.
class SensitivityEstimate {
public:
  /// Initial estimate H0 with covariance sigma0 * I (sigma0 is the
  /// variance scale, e.g. 1e3).
  SensitivityEstimate(Mat h0, double sigma0, double sigma_m, double sigma_p,
                      CovarianceMode mode = CovarianceMode::Factored);

  [[nodiscard]] const Mat& H() const { return h_; }
  [[nodiscard]] CovarianceMode mode() const { return mode_; }
  [[nodiscard]] const Mat& factor() const { return cov_; }      // factored mode
  [[nodiscard]] const Mat& covariance() const { return cov_; }  // full mode
  [[nodiscard]] double sigma_m() const { return sigma_m_; }
  [[nodiscard]] double sigma_p() const { return sigma_p_; }

private:
  SensitivityEstimate() = default;
  friend SensitivityEstimate kalman_update(const SensitivityEstimate&, const Vec&,
                                           const Vec&);
  Mat h_;
  Mat cov_;  // n x n factor A, or n^2 x n^2 full covariance
  double sigma_m_{0.0};
  double sigma_p_{0.0};
  CovarianceMode mode_{CovarianceMode::Factored};
};

/// One Kalman step with observation dl ~ H dp. An all-zero dp skips the
/// state correction but still injects process noise.
SensitivityEstimate kalman_update(const SensitivityEstimate& est, const Vec& dp,
                                  const Vec& dl);

/// Least-squares warm start: H0 = argmin ||dl_hist - dp_hist H'||_F^2
/// + ridge ||H||_F^2, via ridge-regularized normal equations. Pass ridge < 0
/// for the default 1e-8 trace(dp'dp)/n.
Mat warm_start(const Mat& dp_hist, const Mat& dl_hist, double ridge = -1.0);

/// Perturbed-reference history collection: only aggregate loads are
/// recorded. Returns (dp_hist, dl_hist), each (days-1) x n.
std::pair<Mat, Mat> collect_warmstart_history(const FleetScenario& scenario,
                                              const Vec& p_ref, const Bounds& bounds,
                                              double sigma, int days,
                                              std::uint64_t seed);

}  // namespace ofogrid

#endif  // OFOGRID_SENSITIVITY_HPP_
