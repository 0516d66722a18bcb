#include <doctest.h>

#include <Eigen/Dense>

#include "lakegp/linalg.hpp"
#include "lakegp/optim.hpp"
#include "lakegp/rng.hpp"

using namespace lakegp;

namespace {
Eigen::MatrixXd random_spd(int n, uint64_t seed) {
  SplitMix64 rng(seed);
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = rng.gauss();
  return a * a.transpose() + 0.5 * static_cast<double>(n) * Eigen::MatrixXd::Identity(n, n);
}
}  // namespace

TEST_CASE("blocked cholesky matches Eigen LLT, small and large") {
  for (int n : {3, 40, 200, 700}) {
    Eigen::MatrixXd a = random_spd(n, 100 + n);
    Eigen::MatrixXd mine = a;
    REQUIRE(cholesky_in_place(mine));
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    Eigen::MatrixXd ref = llt.matrixL();
    double max_rel = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j)
        max_rel = std::max(max_rel, std::abs(mine(i, j) - ref(i, j)) /
                                        (1.0 + std::abs(ref(i, j))));
    CHECK(max_rel < 1e-9);
  }
}

TEST_CASE("cholesky rejects indefinite input, jitter policy rescues near-PD") {
  Eigen::MatrixXd bad(2, 2);
  bad << 1.0, 2.0, 2.0, 1.0;
  Eigen::MatrixXd work = bad;
  CHECK_FALSE(cholesky_in_place(work));
  CHECK_THROWS_AS(jittered_cholesky(bad, 1.0), NumericError);

  // Duplicated-row correlation matrix is singular but PSD; jitter fixes it.
  Eigen::MatrixXd dup = Eigen::MatrixXd::Ones(3, 3);
  CholFactor f = jittered_cholesky(dup, 1.0);
  CHECK(f.jitter > 0.0);
  Eigen::MatrixXd recon = f.lower * f.lower.transpose();
  CHECK((recon - dup).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("chol_solve and logdet") {
  const int n = 60;
  Eigen::MatrixXd a = random_spd(n, 5);
  CholFactor f = jittered_cholesky(a, 1.0);
  SplitMix64 rng(17);
  Eigen::VectorXd b(n);
  for (int i = 0; i < n; ++i) b[i] = rng.gauss();
  Eigen::VectorXd x = chol_solve(f.lower, b);
  CHECK((a * x - b).cwiseAbs().maxCoeff() < 1e-8);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  const double logdet_lu = lu.matrixLU().diagonal().array().abs().log().sum();
  CHECK(chol_logdet(f.lower) == doctest::Approx(logdet_lu).epsilon(1e-10));
}

TEST_CASE("nelder-mead minimizes a quadratic inside a box") {
  auto f = [](const Eigen::VectorXd& x) {
    return (x[0] - 1.3) * (x[0] - 1.3) + 2.0 * (x[1] + 0.4) * (x[1] + 0.4);
  };
  Eigen::VectorXd lo(2), hi(2), x0(2);
  lo << -5, -5;
  hi << 5, 5;
  x0 << 3, 3;
  NmOptions opt;
  opt.max_evals = 500;
  NmResult r = nelder_mead(f, x0, lo, hi, opt);
  CHECK(std::abs(r.x[0] - 1.3) < 1e-3);
  CHECK(std::abs(r.x[1] + 0.4) < 1e-3);

  // Constrained optimum lands on the box edge.
  Eigen::VectorXd hi2(2);
  hi2 << 1.0, 5.0;
  NmResult r2 = nelder_mead(f, Eigen::VectorXd::Zero(2), lo, hi2, opt);
  CHECK(std::abs(r2.x[0] - 1.0) < 1e-3);
}

TEST_CASE("multistart is deterministic and keeps the best start") {
  auto f = [](const Eigen::VectorXd& x) {
    // Two basins; global minimum near x = -2.
    const double a = (x[0] + 2.0) * (x[0] + 2.0);
    const double b = (x[0] - 2.0) * (x[0] - 2.0) + 0.5;
    return std::min(a, b);
  };
  Eigen::VectorXd lo(1), hi(1);
  lo << -6;
  hi << 6;
  NmOptions opt;
  MultiStartResult r1 = multistart_minimize(f, lo, hi, {}, 6, 42, opt);
  MultiStartResult r2 = multistart_minimize(f, lo, hi, {}, 6, 42, opt);
  CHECK(r1.x == r2.x);
  CHECK(r1.fval == r2.fval);
  CHECK(std::abs(r1.x[0] + 2.0) < 1e-2);
  for (double fv : r1.start_fvals) CHECK(r1.fval <= fv);
}
