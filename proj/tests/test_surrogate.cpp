#include <doctest.h>

#include <cmath>

#include "lakegp/repstats.hpp"
#include "lakegp/surrogate.hpp"
#include "testutil.hpp"

using namespace lakegp;
using testutil::column_vector;

namespace {

// Replicated campaign on a (day, horizon) grid at one depth with a controllable
// noise profile; smooth mean so GPs have signal to work with.
ReplicateSet grid_repset(int n_days, int n_h, int reps, uint64_t seed,
                         double (*noise_sd)(int, int)) {
  RawEnsemble raw;
  SplitMix64 rng(seed);
  const CivilDay start = to_civil(2020, 4, 1);
  for (int day = 0; day < n_days; ++day)
    for (int h = 1; h <= n_h; ++h) {
      const double mean = 10.0 + 4.0 * std::sin(0.05 * day) + 0.15 * h;
      const double sd = noise_sd(day, h);
      for (int xi = 1; xi <= reps; ++xi)
        raw.push(start + day * 3, h, 0, xi, mean + sd * rng.gauss());
    }
  return collapse(raw, 2020);
}

double flat_noise(int, int) { return 0.8; }
double zero_noise(int, int) { return 0.0; }
double growing_noise(int, int h) { return 0.1 + 0.012 * h * h; }

// Mean prediction of the variance GP, back-transformed to the variance scale.
Eigen::VectorXd back_transformed_var(const HetSurrogate& s, const DesignMatrix& x) {
  Eigen::VectorXd mu = s.var_gp.predict(x, Scale::CI).mean;
  for (int i = 0; i < mu.size(); ++i) {
    const double t = std::max(0.0, mu[i]);
    mu[i] = t * t;
  }
  return mu;
}

}  // namespace

TEST_CASE("fit_surrogate contracts") {
  ReplicateSet rs = grid_repset(8, 4, 5, 1, flat_noise);
  ReplicateSet bad = rs;
  bad.counts[3] = 4;
  CHECK_THROWS_AS(fit_surrogate(bad, 30, 2), ContractError);
  ReplicateSet tiny = rs;
  tiny.Xbar.values.conservativeResize(5, Eigen::NoChange);
  tiny.ybar.conservativeResize(5);
  tiny.s2.conservativeResize(5);
  tiny.counts.conservativeResize(5);
  CHECK_THROWS_AS(fit_surrogate(tiny, 30, 2), ContractError);
}

TEST_CASE("dense dispatch path is bit-identical to a direct dense fit") {
  ReplicateSet rs = grid_repset(15, 6, 8, 3, flat_noise);
  REQUIRE(rs.n() <= 500);
  HetSurrogate s = fit_surrogate(rs, 30, 42);
  REQUIRE(s.mean_gp.is_dense());
  DenseGP direct = fit_mle(rs.Xbar, rs.ybar, default_bounds(rs.Xbar),
                           mix_seed(42, 0x6d65u));
  CHECK(s.mean_gp.hp().gamma == direct.hp.gamma);
  CHECK(s.mean_gp.hp().tau2 == direct.hp.tau2);
  CHECK(s.mean_gp.hp().g == direct.hp.g);
}

TEST_CASE("homoskedastic data yields a flat variance surface") {
  ReplicateSet rs = grid_repset(25, 8, 31, 5, flat_noise);
  HetSurrogate s = fit_surrogate(rs, 30, 7);
  Eigen::VectorXd v = back_transformed_var(s, rs.Xbar);
  const double mean = v.mean();
  const double sd = std::sqrt((v.array() - mean).square().mean());
  CHECK(mean > 0.0);
  CHECK(sd / mean <= 0.3);
}

TEST_CASE("heteroskedastic noise growing in horizon is recovered") {
  ReplicateSet rs = grid_repset(25, 10, 20, 9, growing_noise);
  HetSurrogate s = fit_surrogate(rs, 30, 11);
  // Probe a fresh set of days; count increasing adjacent horizon pairs.
  int incr = 0, total = 0;
  for (int day = 0; day < 12; ++day) {
    DesignMatrix q;
    q.roles = rs.Xbar.roles;
    q.active = rs.Xbar.active;
    q.values.resize(10, 4);
    for (int h = 1; h <= 10; ++h) {
      q.values(h - 1, 0) = day_of_year(to_civil(2020, 4, 1) + day * 3 + 1);
      q.values(h - 1, 1) = 0;
      q.values(h - 1, 2) = h;
      q.values(h - 1, 3) = 0;
    }
    Eigen::VectorXd v = back_transformed_var(s, q);
    for (int h = 0; h + 1 < 10; ++h) {
      ++total;
      if (v[h + 1] > v[h]) ++incr;
    }
  }
  CHECK(static_cast<double>(incr) / total >= 0.9);
}

TEST_CASE("SK_PI minus SK_CI equals v95 (1 - 1/n_i), and v95 is nonnegative") {
  ReplicateSet rs = grid_repset(20, 6, 12, 13, flat_noise);
  HetSurrogate s = fit_surrogate(rs, 30, 17);
  DesignMatrix probe = rs.Xbar;
  Eigen::VectorXd vq = v95(s, probe);
  PredictiveMoments ci = predict_surrogate(s, probe, SkMode::SK_CI);
  PredictiveMoments pi = predict_surrogate(s, probe, SkMode::SK_PI);
  CHECK(ci.scale == Scale::CI);
  CHECK(pi.scale == Scale::PI);
  for (int j = 0; j < probe.n(); ++j) {
    CHECK(vq[j] >= 0.0);
    const double gap = pi.var[j] - ci.var[j];
    CHECK(gap == doctest::Approx(vq[j] * (1.0 - 1.0 / s.rep_count)).epsilon(1e-9));
    CHECK(gap >= 0.0);
  }
}

TEST_CASE("zero-noise simulator collapses the variance channel") {
  ReplicateSet rs = grid_repset(18, 5, 9, 21, zero_noise);
  REQUIRE(rs.s2.maxCoeff() <= 1e-20);
  HetSurrogate s = fit_surrogate(rs, 30, 23);
  Eigen::VectorXd vq = v95(s, rs.Xbar);
  const double tau2 = s.mean_gp.hp().tau2;
  for (int j = 0; j < rs.n(); ++j) CHECK(vq[j] <= 1e-3 * tau2);
  PredictiveMoments ci = predict_surrogate(s, rs.Xbar, SkMode::SK_CI);
  Eigen::VectorXd mean_var = s.mean_gp.predict(rs.Xbar, Scale::CI).var;
  for (int j = 0; j < rs.n(); ++j)
    CHECK(ci.var[j] == doctest::Approx(mean_var[j]).epsilon(1e-6));
}

TEST_CASE("sk_reference equals the expanded-data GP with per-observation noise") {
  const int reps = 31;
  ReplicateSet rs = grid_repset(16, 4, reps, 27, flat_noise);
  REQUIRE(rs.n() == 64);
  HetSurrogate s = fit_surrogate(rs, 30, 29);
  const Hyperparams& hp = s.mean_gp.hp();

  DesignMatrix probe = testutil::random_design(20, 4, 31);
  probe.roles = rs.Xbar.roles;
  probe.active = rs.Xbar.active;
  probe.values.col(0) = (probe.values.col(0) * 60.0).array() + 90.0;
  probe.values.col(1).setZero();
  probe.values.col(2) = (probe.values.col(2) * 3.0).array() + 1.0;
  probe.values.col(3).setZero();

  PredictiveMoments sk = sk_reference(rs, hp, s.var_gp, probe, Scale::CI);

  // Expanded data: each unique input repeated, every replicate re-centered to
  // keep the group mean, with per-observation noise Lambda_i matching the
  // smoothed variances used by sk_reference.
  Eigen::VectorXd lam = back_transformed_var(s, rs.Xbar);
  const int n_exp = rs.n() * reps;
  Eigen::MatrixXd xe(n_exp, 4);
  Eigen::VectorXd ye(n_exp), lam_e(n_exp);
  SplitMix64 rng(333);
  int row = 0;
  for (int i = 0; i < rs.n(); ++i) {
    // Any replicate values with the right group mean give the same GP mean;
    // spread them symmetrically.
    for (int r = 0; r < reps; ++r, ++row) {
      xe.row(row) = rs.Xbar.values.row(i);
      ye[row] = rs.ybar[i] + ((r % 2 == 0) ? 1.0 : -1.0) * 0.3;
      lam_e[row] = lam[i];
    }
    if (reps % 2 == 1) ye[row - 1] = rs.ybar[i];  // keep the group mean exact
  }
  DesignMatrix xexp = make_design(xe, rs.Xbar.roles, rs.Xbar.active);
  const double center = rs.ybar.mean();
  Eigen::MatrixXd sigma = hp.tau2 * corr_matrix(xexp.active_block(), hp.gamma, 0.0, false);
  sigma.diagonal() += lam_e;
  Eigen::MatrixXd kx = hp.tau2 * corr_cross(xexp.active_block(), probe.active_block(), hp.gamma);
  Eigen::VectorXd yec = ye.array() - center;
  Eigen::VectorXd alpha = sigma.llt().solve(yec);
  Eigen::VectorXd mean_exp = (kx.transpose() * alpha).array() + center;

  for (int j = 0; j < probe.n(); ++j)
    CHECK(sk.mean[j] == doctest::Approx(mean_exp[j]).epsilon(1e-8));

  CHECK_THROWS_AS(
      sk_reference(grid_repset(130, 16, 2, 1, flat_noise), hp, s.var_gp, probe, Scale::CI),
      ContractError);
}

TEST_CASE("sk_reference interpolates when the smoothed noise vanishes") {
  ReplicateSet rs = grid_repset(12, 4, 6, 41, zero_noise);
  HetSurrogate s = fit_surrogate(rs, 30, 43);
  Hyperparams hp = s.mean_gp.hp();
  hp.g = 0.0;
  PredictiveMoments sk = sk_reference(rs, hp, s.var_gp, rs.Xbar, Scale::CI);
  for (int i = 0; i < rs.n(); ++i)
    CHECK(sk.mean[i] == doctest::Approx(rs.ybar[i]).epsilon(1e-5));
}

TEST_CASE("inflated replicate variance downweights its row") {
  ReplicateSet rs = grid_repset(14, 4, 10, 47, flat_noise);
  HetSurrogate s = fit_surrogate(rs, 30, 49);
  const Hyperparams& hp = s.mean_gp.hp();
  const int target = rs.n() / 2;

  // Near-interpolating variance GPs built directly on the raw and inflated
  // variance values, so the smoothing cannot wash out the spike.
  Hyperparams vhp;
  vhp.gamma = column_vector({4.0, 1.0, 0.25});
  vhp.tau2 = 1.0;
  vhp.g = 1e-8;
  GpModel var_base;
  var_base.impl = make_dense_gp(rs.Xbar, rs.s2.array().sqrt(), vhp);
  ReplicateSet inflated = rs;
  inflated.s2[target] *= 100.0;
  GpModel var_infl;
  var_infl.impl = make_dense_gp(rs.Xbar, inflated.s2.array().sqrt(), vhp);

  std::vector<int> tgt = {target};
  DesignMatrix at_row = rs.Xbar.rows(tgt);
  const double mu_base = sk_reference(rs, hp, var_base, at_row, Scale::CI).mean[0];
  const double mu_infl = sk_reference(inflated, hp, var_infl, at_row, Scale::CI).mean[0];
  CHECK(std::abs(mu_infl - rs.ybar[target]) > std::abs(mu_base - rs.ybar[target]));
}

TEST_CASE("hybrid mean agrees with exact SK, and hybrid CI is conservative") {
  ReplicateSet rs = grid_repset(25, 10, 31, 53, flat_noise);
  HetSurrogate s = fit_surrogate(rs, 30, 59);
  const Hyperparams& hp = s.mean_gp.hp();

  SplitMix64 rng(61);
  const int n_probe = 500;
  DesignMatrix probe;
  probe.roles = rs.Xbar.roles;
  probe.active = rs.Xbar.active;
  probe.values.resize(n_probe, 4);
  for (int j = 0; j < n_probe; ++j) {
    probe.values(j, 0) = rng.uniform(92, 165);
    probe.values(j, 1) = 0;
    probe.values(j, 2) = rng.uniform(1, 10);
    probe.values(j, 3) = 0;
  }

  PredictiveMoments hybrid_ci = predict_surrogate(s, probe, SkMode::SK_CI);
  PredictiveMoments exact_ci = sk_reference(rs, hp, s.var_gp, probe, Scale::CI);

  const double ysd = std::sqrt((rs.ybar.array() - rs.ybar.mean()).square().mean());
  int mean_ok = 0, cons_ok = 0;
  for (int j = 0; j < n_probe; ++j) {
    if (std::abs(hybrid_ci.mean[j] - exact_ci.mean[j]) <= 0.05 * ysd) ++mean_ok;
    if (hybrid_ci.var[j] >= exact_ci.var[j] - 1e-12) ++cons_ok;
  }
  CHECK(mean_ok >= static_cast<int>(0.95 * n_probe));
  CHECK(cons_ok >= static_cast<int>(0.95 * n_probe));
}
