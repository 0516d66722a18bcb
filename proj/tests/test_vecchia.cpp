#include <doctest.h>

#include <algorithm>

#include "lakegp/vecchia.hpp"
#include "testutil.hpp"

using namespace lakegp;
using testutil::column_vector;

namespace {

Hyperparams simple_hp(std::initializer_list<double> gamma, double tau2, double g) {
  Hyperparams hp;
  hp.gamma = column_vector(gamma);
  hp.tau2 = tau2;
  hp.g = g;
  return hp;
}

}  // namespace

TEST_CASE("build_plan neighbor structure") {
  Hyperparams hp = simple_hp({1.0}, 1.0, 0.01);

  // n = 2: the second ordered point conditions on the first.
  DesignMatrix x2 = testutil::random_design(2, 1, 1);
  VecchiaPlan p2 = build_plan(x2, hp, 3, 7);
  CHECK(p2.nbr_offsets[1] - p2.nbr_offsets[0] == 0);
  CHECK(p2.nbr_offsets[2] - p2.nbr_offsets[1] == 1);
  CHECK(p2.neighbors[0] == p2.order[0]);

  // m >= n-1: every ordered point conditions on all predecessors.
  DesignMatrix x = testutil::random_design(12, 2, 2);
  VecchiaPlan sat = build_plan(x, hp = simple_hp({1.0, 1.0}, 1.0, 0.01), 11, 8);
  for (int i = 0; i < 12; ++i) {
    const int nb = sat.nbr_offsets[i + 1] - sat.nbr_offsets[i];
    CHECK(nb == std::min(11, i));
    std::vector<int> pred(sat.order.begin(), sat.order.begin() + i);
    std::sort(pred.begin(), pred.end());
    std::vector<int> got(sat.neighbors.begin() + sat.nbr_offsets[i],
                         sat.neighbors.begin() + sat.nbr_offsets[i + 1]);
    std::sort(got.begin(), got.end());
    CHECK(got == pred);
  }

  // Order is a valid permutation.
  std::vector<int> sorted = sat.order;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 12; ++i) CHECK(sorted[i] == i);
}

TEST_CASE("plan neighbors match a brute-force nearest-predecessor search") {
  // 1-d equispaced grid, m = 2, plus random configurations.
  for (int rep = 0; rep < 4; ++rep) {
    const int n = 24;
    DesignMatrix x = rep == 0 ? make_design(Eigen::VectorXd::LinSpaced(n, 0.0, 4.6).eval(),
                                            {Col::Day}, {0})
                              : testutil::random_design(n, 1, 50 + rep);
    Hyperparams hp = simple_hp({0.7}, 1.0, 0.02);
    const int m = 2;
    VecchiaPlan plan = build_plan(x, hp, m, 17 + rep);
    Eigen::MatrixXd scaled = x.active_block();
    scaled.col(0) *= 1.0 / std::sqrt(hp.gamma[0]);
    for (int i = 1; i < n; ++i) {
      // Exhaustive search over predecessors with (distance, index) ordering.
      std::vector<std::pair<double, int>> cand;
      for (int p = 0; p < i; ++p) {
        const int orig = plan.order[p];
        cand.push_back({(scaled.row(orig) - scaled.row(plan.order[i])).squaredNorm(), orig});
      }
      std::sort(cand.begin(), cand.end());
      std::vector<int> expect;
      for (int p = 0; p < std::min(m, i); ++p) expect.push_back(cand[p].second);
      std::sort(expect.begin(), expect.end());
      std::vector<int> got(plan.neighbors.begin() + plan.nbr_offsets[i],
                           plan.neighbors.begin() + plan.nbr_offsets[i + 1]);
      std::sort(got.begin(), got.end());
      CHECK(got == expect);
    }
  }
}

TEST_CASE("vecchia_loglik: single point and saturation exactness") {
  Hyperparams hp = simple_hp({0.5}, 1.7, 0.2);

  // n = 1 marginal.
  DesignMatrix x1 = make_design(Eigen::MatrixXd::Constant(1, 1, 0.3), {Col::Day}, {0});
  Eigen::VectorXd y1 = column_vector({0.8});
  VecchiaPlan p1;
  p1.order = {0};
  p1.nbr_offsets = {0, 0};
  p1.m = 1;
  p1.scaling = column_vector({1.0});
  const double v = hp.tau2 * (1.0 + hp.g);
  const double expect = -0.5 * std::log(2.0 * 3.141592653589793 * v) - 0.64 / (2.0 * v);
  CHECK(vecchia_loglik(x1, y1, hp, p1) == doctest::Approx(expect).epsilon(1e-12));

  // m >= n-1 equals the dense likelihood.
  for (uint64_t seed : {11u, 12u, 13u}) {
    const int n = 40 + static_cast<int>(seed);
    DesignMatrix x = testutil::random_design(n, 2, seed);
    Hyperparams hp2 = simple_hp({0.4, 1.1}, 2.2, 0.1);
    Eigen::VectorXd y = testutil::sample_gp(x, hp2, seed + 100);
    VecchiaPlan plan = build_plan(x, hp2, n - 1, seed);
    const double dense = log_likelihood(x, y, hp2);
    CHECK(vecchia_loglik(x, y, hp2, plan) == doctest::Approx(dense).epsilon(1e-6));
  }
}

TEST_CASE("vecchia_loglik error decreases with m") {
  // Realized |loglik error| is not deterministically monotone (the signed error
  // oscillates through zero near convergence), so the sweep counts ordered
  // comparisons across 50 instances and requires >= 95% to be non-increasing.
  int good_pairs = 0, total_pairs = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const uint64_t seed = 7000 + trial;
    const int n = 80 + static_cast<int>(SplitMix64(seed).below(40));
    DesignMatrix x = testutil::random_design(n, 2, seed);
    Hyperparams hp = simple_hp({0.01, 0.01}, 1.5, 1e-4);
    Eigen::VectorXd y = testutil::sample_gp(x, hp, seed + 1);
    const double exact = log_likelihood(x, y, hp);
    double prev_err = 1e300;
    for (int m : {1, 5, 10, 30}) {
      VecchiaPlan plan = build_plan(x, hp, m, seed + 2);
      const double err = std::abs(vecchia_loglik(x, y, hp, plan) - exact);
      if (prev_err < 1e299) {
        ++total_pairs;
        if (err <= prev_err * (1.0 + 1e-9) + 1e-9) ++good_pairs;
      }
      prev_err = err;
    }
  }
  CHECK(good_pairs >= static_cast<int>(0.95 * total_pairs));
}

TEST_CASE("predict_vecchia: saturation, interpolation, reversion") {
  const int n = 60;
  DesignMatrix x = testutil::random_design(n, 2, 301);
  Hyperparams hp = simple_hp({0.3, 0.6}, 1.4, 0.12);
  Eigen::VectorXd y = testutil::sample_gp(x, hp, 302);

  // m >= n reproduces dense prediction on both scales.
  VecchiaGP gp;
  gp.hp = hp;
  gp.X = x;
  gp.y_mean = y.mean();
  gp.y = y.array() - gp.y_mean;
  gp.plan = build_plan(x, hp, n, 303);
  DenseGP dense = make_dense_gp(x, y, hp);
  DesignMatrix probe = testutil::random_design(25, 2, 304);
  for (Scale s : {Scale::CI, Scale::PI}) {
    PredictiveMoments pv = predict_vecchia(gp, probe, s);
    PredictiveMoments pd = predict(dense, probe, s);
    for (int j = 0; j < probe.n(); ++j) {
      CHECK(pv.mean[j] == doctest::Approx(pd.mean[j]).epsilon(1e-6));
      CHECK(pv.var[j] == doctest::Approx(pd.var[j]).epsilon(1e-6));
      CHECK(pv.var[j] >= 0.0);
    }
  }

  // g = 0 and the training point among neighbors: interpolation.
  Hyperparams hp0 = simple_hp({0.3, 0.6}, 1.4, 0.0);
  VecchiaGP gp0;
  gp0.hp = hp0;
  gp0.X = x;
  gp0.y_mean = y.mean();
  gp0.y = y.array() - gp0.y_mean;
  gp0.plan = build_plan(x, hp0, 5, 305);
  std::vector<int> first_rows = {0, 1, 2};
  PredictiveMoments at_train = predict_vecchia(gp0, x.rows(first_rows), Scale::CI);
  for (int j = 0; j < 3; ++j) CHECK(at_train.mean[j] == doctest::Approx(y[j]).epsilon(1e-7));

  // Far away reverts to the mean with PI variance tau2(1+g).
  Eigen::MatrixXd farv(1, 2);
  farv << 400.0, -350.0;
  PredictiveMoments rev = predict_vecchia(gp, make_design(farv, x.roles, x.active), Scale::PI);
  CHECK(rev.mean[0] == doctest::Approx(gp.y_mean).epsilon(1e-9));
  CHECK(rev.var[0] == doctest::Approx(hp.tau2 * (1.0 + hp.g)).epsilon(1e-9));
}

TEST_CASE("fit_vecchia matches dense fits at saturation and is deterministic") {
  const int n = 90;
  DesignMatrix x = testutil::random_design(n, 2, 401, 0.0, 3.0);
  Hyperparams truth = simple_hp({0.4, 0.9}, 2.0, 0.05);
  Eigen::VectorXd y = testutil::sample_gp(x, truth, 402);

  FitControl ctl;
  ctl.n_starts = 1;
  ctl.max_evals = 250;
  ctl.xtol_abs = 1e-5;
  VecchiaGP va = fit_vecchia(x, y, n - 1, default_bounds(x), 55, ctl);
  VecchiaGP vb = fit_vecchia(x, y, n - 1, default_bounds(x), 55, ctl);
  CHECK(va.hp.gamma == vb.hp.gamma);
  CHECK(va.hp.tau2 == vb.hp.tau2);
  CHECK(va.hp.g == vb.hp.g);

  // At saturation the Vecchia objective is the dense likelihood, so the fitted
  // likelihood must match the dense optimizer's up to optimizer tolerance.
  FitControl dctl;
  dctl.n_starts = 5;
  dctl.max_evals = 250;
  DenseGP dg = fit_mle(x, y, default_bounds(x), 55, dctl);
  Eigen::VectorXd yc = y.array() - y.mean();
  const double ll_v = log_likelihood(x, yc, va.hp);
  const double ll_d = log_likelihood(x, yc, dg.hp);
  CHECK(std::abs(ll_v - ll_d) / std::abs(ll_d) < 5e-3);
}

TEST_CASE("vecchia variances stay nonnegative under duplicate inputs") {
  // Replicate-collapsed designs can carry exact duplicates across years.
  Eigen::MatrixXd v(8, 1);
  v << 1, 1, 2, 2, 3, 3, 4, 4;
  DesignMatrix x = make_design(v, {Col::Day}, {0});
  Hyperparams hp = simple_hp({1.0}, 1.0, 1e-6);
  Eigen::VectorXd y = column_vector({0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8});
  VecchiaGP gp;
  gp.hp = hp;
  gp.X = x;
  gp.y_mean = y.mean();
  gp.y = y.array() - gp.y_mean;
  gp.plan = build_plan(x, hp, 4, 1);
  CHECK(std::isfinite(vecchia_loglik(x, y, hp, gp.plan)));
  PredictiveMoments pm = predict_vecchia(gp, x, Scale::PI);
  for (int j = 0; j < 8; ++j) CHECK(pm.var[j] >= 0.0);
}
