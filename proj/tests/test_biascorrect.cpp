#include <doctest.h>

#include <cmath>

#include "lakegp/biascorrect.hpp"
#include "lakegp/repstats.hpp"
#include "testutil.hpp"

using namespace lakegp;
using testutil::column_vector;

namespace {

// Collapsed inputs covering (ref day, horizon, depth) for a run of days. The
// simulated surface observed at calendar day a is 12 + 3 sin(0.03 (a-start)) - 0.4 d;
// the simulator is shifted warm by `mean_shift`.
ReplicateSet synth_repset(CivilDay start, int n_days, int n_h, int n_d, int reps, uint64_t seed,
                          double mean_shift, int base_year) {
  RawEnsemble raw;
  SplitMix64 rng(seed);
  for (int day = 0; day < n_days; ++day)
    for (int h = 1; h <= n_h; ++h)
      for (int d = 0; d < n_d; ++d) {
        const double mean = 12.0 + 3.0 * std::sin(0.03 * (day + h)) - 0.4 * d + mean_shift;
        for (int xi = 1; xi <= reps; ++xi) raw.push(start + day, h, d, xi, mean + 0.3 * rng.gauss());
      }
  return collapse(raw, base_year);
}

}  // namespace

TEST_CASE("align_field places one observation in every horizon slot") {
  // Design rows (D - h, d=3, h) for h = 1..30 plus a decoy depth.
  const int base_year = 2021;
  const CivilDay obs_day = to_civil(2021, 6, 15);
  DesignMatrix x;
  x.roles = {Col::Day, Col::Depth, Col::Horizon, Col::Year};
  x.active = {0, 1, 2};
  x.values.resize(60, 4);
  for (int h = 1; h <= 30; ++h) {
    const CivilDay ref = obs_day - h;
    x.values(h - 1, 0) = day_of_year(ref);
    x.values(h - 1, 1) = 3;
    x.values(h - 1, 2) = h;
    x.values(h - 1, 3) = year_of(ref) - base_year;
    // Decoy rows at another depth never match.
    x.values(30 + h - 1, 0) = day_of_year(ref);
    x.values(30 + h - 1, 1) = 5;
    x.values(30 + h - 1, 2) = h;
    x.values(30 + h - 1, 3) = year_of(ref) - base_year;
  }
  FieldSeries field;
  field.push(obs_day, 3, 21.5);
  AlignedField got = align_field(x, field, base_year);
  for (int i = 0; i < 30; ++i) {
    CHECK(got.mask[i] == 1);
    CHECK(got.value[i] == 21.5);
  }
  for (int i = 30; i < 60; ++i) CHECK(got.mask[i] == 0);

  // Empty field: everything masked.
  FieldSeries empty;
  AlignedField none = align_field(x, empty, base_year);
  for (int i = 0; i < 60; ++i) CHECK(none.mask[i] == 0);
}

TEST_CASE("align_field rolls over year boundaries with calendar arithmetic") {
  const int base_year = 2020;
  DesignMatrix x;
  x.roles = {Col::Day, Col::Depth, Col::Horizon, Col::Year};
  x.active = {0, 1, 2};
  x.values.resize(1, 4);
  const CivilDay ref = to_civil(2020, 12, 30);  // + h=5 -> 2021-01-04
  x.values(0, 0) = day_of_year(ref);
  x.values(0, 1) = 0;
  x.values(0, 2) = 5;
  x.values(0, 3) = 0;
  FieldSeries field;
  field.push(to_civil(2021, 1, 4), 0, 4.25);
  AlignedField got = align_field(x, field, base_year);
  REQUIRE(got.mask[0] == 1);
  CHECK(got.value[0] == 4.25);
}

TEST_CASE("full coverage masks only the trailing horizon window") {
  const int base_year = 2022;
  const CivilDay start = to_civil(2022, 3, 1);
  const int n_days = 50, n_h = 10, n_d = 2;
  ReplicateSet rs = synth_repset(start, n_days, n_h, n_d, 3, 1, 0.0, base_year);
  // Field covers through the end of the reference window only.
  FieldSeries field;
  for (CivilDay a = start; a <= start + n_days - 1; ++a)
    for (int d = 0; d < n_d; ++d) field.push(a, d, 10.0);
  AlignedField got = align_field(rs.Xbar, field, base_year);
  int masked = 0;
  for (int i = 0; i < rs.n(); ++i) {
    const int t = static_cast<int>(rs.Xbar.values(i, 0));
    const int h = static_cast<int>(rs.Xbar.values(i, 2));
    const CivilDay target = civil_of_doy(base_year, t) + h;
    const bool in_window = target <= start + n_days - 1;
    CHECK(got.mask[i] == (in_window ? 1 : 0));
    if (!got.mask[i]) ++masked;
  }
  // Counting argument: masked rows are exactly those reaching past the end.
  int expect = 0;
  for (int day = 0; day < n_days; ++day)
    for (int h = 1; h <= n_h; ++h)
      if (day + h > n_days - 1) expect += n_d;
  CHECK(masked == expect);
}

TEST_CASE("build_discrepancies sign convention and masking") {
  const int base_year = 2022;
  const CivilDay start = to_civil(2022, 3, 1);
  ReplicateSet rs = synth_repset(start, 40, 8, 2, 24, 3, /*mean_shift=*/2.0, base_year);
  HetSurrogate s = fit_surrogate(rs, 30, 7);

  // Field equals the unshifted surface: the simulator is +2 degrees warm.
  // Coverage stops at the last reference day, so trailing rows stay masked.
  FieldSeries field;
  for (CivilDay a = start; a <= start + 40 - 1; ++a)
    for (int d = 0; d < 2; ++d) {
      const int day_h = static_cast<int>(a - start);
      field.push(a, d, 12.0 + 3.0 * std::sin(0.03 * day_h) - 0.4 * d);
    }
  DiscrepancyData disc = build_discrepancies(s, rs, field, base_year);
  CHECK(disc.X.n() == disc.y.size());
  CHECK(disc.X.n() < rs.n());  // trailing rows masked out
  CHECK(disc.y.mean() == doctest::Approx(-2.0).epsilon(0.05));

  // No unmasked rows at all.
  FieldSeries empty;
  CHECK_THROWS_AS(build_discrepancies(s, rs, empty, base_year), DataError);
}

TEST_CASE("unbiased simulator gives discrepancies centered at zero") {
  const int base_year = 2023;
  const CivilDay start = to_civil(2023, 2, 1);
  ReplicateSet rs = synth_repset(start, 40, 8, 2, 24, 11, 0.0, base_year);
  HetSurrogate s = fit_surrogate(rs, 30, 13);
  FieldSeries field;
  SplitMix64 rng(17);
  const double noise = 0.2;
  for (CivilDay a = start; a <= start + 48; ++a)
    for (int d = 0; d < 2; ++d) {
      const int day_h = static_cast<int>(a - start);
      field.push(a, d, 12.0 + 3.0 * std::sin(0.03 * day_h) - 0.4 * d + noise * rng.gauss());
    }
  DiscrepancyData disc = build_discrepancies(s, rs, field, base_year);
  const double se = noise / std::sqrt(static_cast<double>(disc.y.size()));
  // Two standard errors plus slack for surrogate smoothing error.
  CHECK(std::abs(disc.y.mean()) <= 2.0 * se + 0.05);
}

TEST_CASE("fit_bias recovers a constant shift and attributes noise to the nugget") {
  SplitMix64 rng(23);
  DesignMatrix x = testutil::random_design(160, 3, 29, 0.0, 30.0);
  x.roles = {Col::Day, Col::Depth, Col::Horizon};
  Eigen::VectorXd y(160);
  for (int i = 0; i < 160; ++i) y[i] = -2.0 + 0.05 * rng.gauss();
  DiscrepancyData disc{x, y};
  BiasModel b = fit_bias(disc, 30, 31);
  DesignMatrix probe = testutil::random_design(50, 3, 37, 2.0, 28.0);
  probe.roles = x.roles;
  Eigen::VectorXd mu = b.gp.predict(probe, Scale::CI).mean;
  for (int j = 0; j < 50; ++j) CHECK(std::abs(mu[j] + 2.0) <= 0.05);

  // Pure white-noise discrepancies: the nugget carries >= 80% of the variance.
  Eigen::VectorXd noise(160);
  for (int i = 0; i < 160; ++i) noise[i] = rng.gauss();
  BiasModel bn = fit_bias({x, noise}, 30, 41);
  const double frac = bn.gp.hp().g / (1.0 + bn.gp.hp().g);
  CHECK(frac >= 0.8);

  CHECK_THROWS_AS(fit_bias({x.rows({0, 1, 2}), y.head(3)}, 30, 1), ContractError);
}

TEST_CASE("predict_gpbc chains moments additively") {
  const int base_year = 2022;
  const CivilDay start = to_civil(2022, 5, 1);
  ReplicateSet rs = synth_repset(start, 30, 6, 2, 16, 43, 1.0, base_year);
  HetSurrogate s = fit_surrogate(rs, 30, 47);
  FieldSeries field;
  for (CivilDay a = start; a <= start + 36; ++a)
    for (int d = 0; d < 2; ++d) {
      const int day_h = static_cast<int>(a - start);
      field.push(a, d, 12.0 + 3.0 * std::sin(0.03 * day_h) - 0.4 * d);
    }
  DiscrepancyData disc = build_discrepancies(s, rs, field, base_year);
  BiasModel b = fit_bias(disc, 30, 53);

  DesignMatrix probe = rs.Xbar.rows({0, 5, 11, 40, 77});
  PredictiveMoments gpbc = predict_gpbc(s, b, probe);
  PredictiveMoments sk_ci = predict_surrogate(s, probe, SkMode::SK_CI);
  PredictiveMoments bias_pi = b.gp.predict(probe, Scale::PI);
  for (int j = 0; j < probe.n(); ++j) {
    CHECK(gpbc.mean[j] == sk_ci.mean[j] + bias_pi.mean[j]);
    CHECK(gpbc.var[j] == sk_ci.var[j] + bias_pi.var[j]);  // exact additivity
    CHECK(gpbc.var[j] >= bias_pi.var[j]);                 // no cross-term subtraction
  }
  CHECK(gpbc.scale == Scale::PI);
}
