#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ofogrid/qp.hpp"
#include "ofogrid/random.hpp"
#include "oracles.hpp"

#include <cmath>

using namespace ofogrid;

namespace {

double qp_value(const QpProblem& qp, const Vec& x)
{
  return 0.5 * x.dot(qp.P * x) + qp.q.dot(x);
}

QpProblem random_qp(Rng& rng, int n, int m)
{
  QpProblem qp;
  Mat mtx(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) mtx(r, c) = rng.normal(0.0, 1.0);
  qp.P = mtx.transpose() * mtx + 0.1 * Mat::Identity(n, n);
  qp.q = rng.normal_vector(n, 1.0);
  qp.A = Mat(m, n);
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < n; ++c) qp.A(r, c) = rng.normal(0.0, 1.0);
  const Vec x0 = rng.normal_vector(n, 1.0);
  const Vec ax0 = qp.A * x0;
  qp.lo = Vec(m);
  qp.up = Vec(m);
  for (int r = 0; r < m; ++r) {
    qp.lo[r] = ax0[r] - rng.uniform(0.05, 1.0);
    qp.up[r] = ax0[r] + rng.uniform(0.05, 1.0);
  }
  return qp;
}

}  // namespace

TEST_CASE("projection onto a box")
{
  const int n = 4;
  QpProblem qp;
  qp.P = Mat::Identity(n, n);
  Vec c(n);
  c << -0.5, 0.3, 1.7, 0.99;
  qp.q = -c;
  qp.A = Mat::Identity(n, n);
  qp.lo = Vec::Zero(n);
  qp.up = Vec::Ones(n);

  const auto res = solve_qp(qp);
  REQUIRE(res.converged);
  Vec expect(n);
  expect << 0.0, 0.3, 1.0, 0.99;
  CHECK((res.x - expect).lpNorm<Eigen::Infinity>() <= 1e-7);
}

TEST_CASE("equality-like tight bounds")
{
  QpProblem qp;
  qp.P = Mat::Identity(2, 2);
  qp.q = Vec::Zero(2);
  qp.A = Mat(1, 2);
  qp.A << 1.0, 1.0;
  qp.lo = Vec::Constant(1, 2.0);
  qp.up = Vec::Constant(1, 2.0);

  const auto res = solve_qp(qp);
  REQUIRE(res.converged);
  CHECK(res.x[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(res.x[1] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("solver matches the enumeration oracle")
{
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform(0.0, 3.0));
    const int m = 2 * n;
    const QpProblem qp = random_qp(rng, n, m);

    const Vec oracle = testing::enumerate_box_qp(qp);
    REQUIRE(oracle.size() == qp.P.rows());
    const auto res = solve_qp(qp);
    REQUIRE(res.converged);
    CHECK((res.x - oracle).lpNorm<Eigen::Infinity>() <= 1e-6);
    CHECK(qp_value(qp, res.x) <= qp_value(qp, oracle) + 1e-8);
  }
}

TEST_CASE("solutions satisfy the optimality conditions on larger problems")
{
  Rng rng(32);
  for (int trial = 0; trial < 40; ++trial) {
    const QpProblem qp = random_qp(rng, 10, 20);
    const auto res = solve_qp(qp);
    REQUIRE(res.converged);
    CHECK(qp_kkt_residual(qp, res.x, res.y) <= 1e-6);
  }
}

TEST_CASE("polish does not hurt the optimality residual")
{
  Rng rng(33);
  const QpProblem qp = random_qp(rng, 8, 16);
  QpSettings plain;
  plain.polish = false;
  const auto rough = solve_qp(qp, plain);
  const auto polished = solve_qp(qp);
  REQUIRE(rough.converged);
  REQUIRE(polished.converged);
  CHECK(qp_kkt_residual(qp, polished.x, polished.y) <=
        qp_kkt_residual(qp, rough.x, rough.y) + 1e-12);
}

TEST_CASE("iteration cap reports non-convergence")
{
  Rng rng(34);
  const QpProblem qp = random_qp(rng, 6, 12);
  QpSettings s;
  s.max_iter = 2;
  s.check_every = 1;
  s.polish = false;
  const auto res = solve_qp(qp, s);
  CHECK_FALSE(res.converged);
}

TEST_CASE("deterministic across repeated solves")
{
  Rng rng(35);
  const QpProblem qp = random_qp(rng, 5, 10);
  const auto a = solve_qp(qp);
  const auto b = solve_qp(qp);
  CHECK((a.x - b.x).norm() == 0.0);
  CHECK(a.iters == b.iters);
}
