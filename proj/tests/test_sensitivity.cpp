#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ofogrid/random.hpp"
#include "ofogrid/sensitivity.hpp"
#include "ofogrid/simkit.hpp"

#include <Eigen/Eigenvalues>

using namespace ofogrid;

TEST_CASE("scalar update by hand")
{
  // n = 1, H0 = 0, A0 = 1, sigma_m = 1, sigma_p = 0, dp = dl = 1:
  // innovation 2, gain 1/2, H+ = 1/2, A+ = 1 - 1/2 = 1/2.
  SensitivityEstimate est(Mat::Zero(1, 1), 1.0, 1.0, 0.0);
  const auto next = kalman_update(est, Vec::Ones(1), Vec::Ones(1));
  CHECK(next.H()(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(next.factor()(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("zero price step skips the correction but keeps process noise")
{
  SensitivityEstimate est(Mat::Zero(2, 2), 1.0, 1.0, 0.25);
  const auto next = kalman_update(est, Vec::Zero(2), Vec::Ones(2));
  CHECK(next.H().norm() == 0.0);
  CHECK((next.factor() - 1.25 * Mat::Identity(2, 2)).norm() <= 1e-12);
}

TEST_CASE("factored and full covariance modes agree")
{
  const int n = 4;
  Rng rng(11);
  Mat h0 = Mat::Zero(n, n);
  SensitivityEstimate fac(h0, 10.0, 2.0, 0.1, CovarianceMode::Factored);
  SensitivityEstimate full(h0, 10.0, 2.0, 0.1, CovarianceMode::Full);

  for (int t = 0; t < 50; ++t) {
    const Vec dp = rng.normal_vector(n, 1.0);
    const Vec dl = rng.normal_vector(n, 1.0);
    fac = kalman_update(fac, dp, dl);
    full = kalman_update(full, dp, dl);
    CHECK((fac.H() - full.H()).lpNorm<Eigen::Infinity>() <= 1e-10);
  }
  // The full covariance must stay in Kronecker form A (x) I.
  Mat a = fac.factor();
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      const Mat block = full.covariance().block(r * n, c * n, n, n);
      CHECK((block - a(r, c) * Mat::Identity(n, n)).lpNorm<Eigen::Infinity>() <= 1e-8);
    }
}

TEST_CASE("covariance factor stays positive semidefinite")
{
  const int n = 6;
  Rng rng(22);
  SensitivityEstimate est(Mat::Zero(n, n), 1000.0, 100.0, 0.01);
  for (int t = 0; t < 300; ++t) {
    const Vec dp = rng.normal_vector(n, 0.05);
    const Vec dl = rng.normal_vector(n, 5.0);
    est = kalman_update(est, dp, dl);
    CHECK((est.factor() - est.factor().transpose()).norm() <= 1e-9);
  }
  Eigen::SelfAdjointEigenSolver<Mat> eig(est.factor());
  CHECK(eig.eigenvalues().minCoeff() >= -1e-10);
}

TEST_CASE("estimate converges on an exactly linear plant")
{
  const int n = 5;
  Rng rng(33);
  Mat h_true(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) h_true(r, c) = rng.normal(0.0, 2.0);

  SensitivityEstimate est(Mat::Zero(n, n), 1000.0, 1e-6, 0.0);
  for (int t = 0; t < 500; ++t) {
    const Vec dp = rng.normal_vector(n, 1.0);
    est = kalman_update(est, dp, h_true * dp);
  }
  CHECK((est.H() - h_true).lpNorm<Eigen::Infinity>() <= 1e-3);
}

TEST_CASE("invalid innovation throws")
{
  SensitivityEstimate est(Mat::Zero(1, 1), 1.0, -2.0, 0.0);
  CHECK_THROWS_AS(kalman_update(est, Vec::Ones(1), Vec::Ones(1)), NumericBreakdown);
}

TEST_CASE("warm start recovers a linear plant from clean history")
{
  const int n = 6;
  const int rows = 40;
  Rng rng(44);
  Mat h_true(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) h_true(r, c) = rng.normal(0.0, 3.0);

  Mat dp_hist(rows, n), dl_hist(rows, n);
  for (int t = 0; t < rows; ++t) {
    const Vec dp = rng.normal_vector(n, 1.0);
    dp_hist.row(t) = dp.transpose();
    dl_hist.row(t) = (h_true * dp).transpose();
  }
  const Mat h0 = warm_start(dp_hist, dl_hist);
  CHECK((h0 - h_true).lpNorm<Eigen::Infinity>() <= 1e-6);
}

TEST_CASE("warm start is invariant to history row order")
{
  const int n = 4;
  const int rows = 12;
  Rng rng(55);
  Mat dp_hist(rows, n), dl_hist(rows, n);
  for (int t = 0; t < rows; ++t)
    for (int c = 0; c < n; ++c) {
      dp_hist(t, c) = rng.normal(0.0, 1.0);
      dl_hist(t, c) = rng.normal(0.0, 1.0);
    }
  Mat dp_rev = dp_hist.colwise().reverse().eval();
  Mat dl_rev = dl_hist.colwise().reverse().eval();
  CHECK((warm_start(dp_hist, dl_hist) - warm_start(dp_rev, dl_rev))
            .lpNorm<Eigen::Infinity>() <= 1e-9);
}

TEST_CASE("rank-deficient history fits the observed direction")
{
  const int n = 3;
  Mat dp_hist(1, n), dl_hist(1, n);
  dp_hist << 1.0, 2.0, -1.0;
  dl_hist << 3.0, 0.5, 1.0;
  const Mat h0 = warm_start(dp_hist, dl_hist, 1e-12);
  CHECK((h0 * dp_hist.row(0).transpose() - dl_hist.row(0).transpose())
            .lpNorm<Eigen::Infinity>() <= 1e-6);
}

TEST_CASE("warm-start history collection shape and determinism")
{
  const TimeGrid g = make_time_grid(24, 60);
  const FleetScenario sc = generate_workplace_fleet(10, g, 3);
  const Vec p_ref = generate_reference_tariff(g);

  const auto [dp_a, dl_a] = collect_warmstart_history(sc, p_ref, Bounds{}, 0.01, 15, 9);
  const auto [dp_b, dl_b] = collect_warmstart_history(sc, p_ref, Bounds{}, 0.01, 15, 9);
  CHECK(dp_a.rows() == 14);
  CHECK(dp_a.cols() == 24);
  CHECK(dl_a.rows() == 14);
  CHECK((dp_a - dp_b).norm() == 0.0);
  CHECK((dl_a - dl_b).norm() == 0.0);

  // The fitted model should roughly predict a fresh response difference.
  const Mat h0 = warm_start(dp_a, dl_a);
  CHECK(h0.norm() > 0.0);
}

TEST_CASE("too little history throws")
{
  CHECK_THROWS_AS(warm_start(Mat::Zero(0, 4), Mat::Zero(0, 4)), InsufficientData);
  const TimeGrid g = make_time_grid(24, 60);
  const FleetScenario sc = generate_workplace_fleet(4, g, 3);
  CHECK_THROWS_AS(
      collect_warmstart_history(sc, generate_reference_tariff(g), Bounds{}, 0.01, 1, 9),
      InsufficientData);
}
