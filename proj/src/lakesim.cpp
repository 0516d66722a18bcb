#include "lakegp/lakesim.hpp"

#include <cmath>
#include <vector>

#include "lakegp/rng.hpp"

namespace lakegp {

namespace {

constexpr double kTwoPi = 6.2831853071795864769;
constexpr int kYearHarmonics = 6;

// Smooth year-differentiating perturbation: a fixed set of low-frequency
// sinusoids over absolute time, drawn once from the seed.
struct YearField {
  double c[kYearHarmonics];
  double f[kYearHarmonics];
  double p[kYearHarmonics];

  explicit YearField(uint64_t seed) {
    SplitMix64 rng(mix_seed(seed, 0x79656172u));
    for (int k = 0; k < kYearHarmonics; ++k) {
      c[k] = rng.gauss() / std::sqrt(static_cast<double>(kYearHarmonics));
      f[k] = 1.0 / rng.uniform(45.0, 400.0);
      p[k] = rng.uniform(0.0, kTwoPi);
    }
  }

  double eval(double a) const {
    double s = 0.0;
    for (int k = 0; k < kYearHarmonics; ++k) s += c[k] * std::sin(kTwoPi * f[k] * a + p[k]);
    return s;
  }
};

double anomaly_bump(const SimConfig& cfg, CivilDay date) {
  if (cfg.anomaly_start < 0 || cfg.anomaly_len <= 0 || cfg.anomaly_amp == 0.0) return 0.0;
  const double u = static_cast<double>(date - (cfg.start + cfg.anomaly_start)) / cfg.anomaly_len;
  if (u <= 0.0 || u >= 1.0) return 0.0;
  const double s = std::sin(3.1415926535897932385 * u);
  return cfg.anomaly_amp * s * s;
}

double truth_at(const SimConfig& cfg, const YearField& yf, CivilDay date, int depth) {
  const double a = static_cast<double>(date - cfg.start);
  const double damp = std::exp(-cfg.depth_damp * depth);
  const double seasonal = -std::cos(kTwoPi * a / 365.25);
  return cfg.mean_temp + cfg.seasonal_amp * damp * seasonal +
         cfg.year_amp * damp * yf.eval(a) + damp * anomaly_bump(cfg, date);
}

}  // namespace

void SimConfig::validate() const {
  if (n_ref_days < 1 || n_depths < 1 || n_horizons < 1 || n_ensemble < 1 || ref_stride < 1)
    throw ContractError("SimConfig: counts and stride must be >= 1");
  if (obs_noise < 0.0 || spread_growth < 0.0)
    throw ContractError("SimConfig: noise and spread must be nonnegative");
}

double injected_bias(const SimConfig& cfg, int t_doy, int depth, int horizon) {
  double b = cfg.bias_const +
             cfg.bias_seasonal * std::sin(kTwoPi * t_doy / 365.0) *
                 (static_cast<double>(horizon) / cfg.n_horizons);
  if (cfg.bias_depth != 0.0 && cfg.n_depths > 1)
    b += cfg.bias_depth * (static_cast<double>(depth) / (cfg.n_depths - 1));
  return b;
}

double truth_oracle(const SimConfig& cfg, CivilDay date, int depth) {
  cfg.validate();
  if (date < cfg.first_field_day() || date > cfg.last_field_day())
    throw ContractError("truth_oracle: date outside the simulated window");
  const YearField yf(cfg.seed);
  return truth_at(cfg, yf, date, depth);
}

Campaign generate_campaign(const SimConfig& cfg) {
  cfg.validate();
  const YearField yf(cfg.seed);

  std::vector<CivilDay> refs;
  for (int j = 0; j < cfg.n_ref_days; ++j) {
    const bool dense = cfg.dense_from >= 0 && j >= cfg.dense_from;
    if (dense || j % cfg.ref_stride == 0) refs.push_back(cfg.start + j);
  }

  Campaign out;
  const int64_t rows_per_ref =
      static_cast<int64_t>(cfg.n_horizons) * cfg.n_depths * cfg.n_ensemble;
  const int64_t n_rows = rows_per_ref * static_cast<int64_t>(refs.size());
  out.ensemble.ref_day.resize(n_rows);
  out.ensemble.horizon.resize(n_rows);
  out.ensemble.depth.resize(n_rows);
  out.ensemble.member.resize(n_rows);
  out.ensemble.temp.resize(n_rows);

#pragma omp parallel for schedule(dynamic, 8)
  for (int64_t ri = 0; ri < static_cast<int64_t>(refs.size()); ++ri) {
    const CivilDay r = refs[ri];
    const int t_doy = day_of_year(r);
    // Per-(date, member) deviation walks; shared across depths, damped with depth.
    std::vector<double> walk(static_cast<size_t>(cfg.n_ensemble) * cfg.n_horizons);
    for (int xi = 0; xi < cfg.n_ensemble; ++xi) {
      SplitMix64 rng(mix_seed(cfg.seed, 0x646576u, static_cast<uint64_t>(r),
                              static_cast<uint64_t>(xi)));
      double w = 0.0;
      for (int h = 0; h < cfg.n_horizons; ++h) {
        w += rng.gauss();
        walk[static_cast<size_t>(xi) * cfg.n_horizons + h] = w;
      }
    }
    int64_t idx = ri * rows_per_ref;
    for (int h = 1; h <= cfg.n_horizons; ++h) {
      for (int d = 0; d < cfg.n_depths; ++d) {
        const double base = truth_at(cfg, yf, r + h, d) + injected_bias(cfg, t_doy, d, h);
        const double spread = cfg.spread_growth * std::exp(-cfg.spread_depth_damp * d);
        for (int xi = 0; xi < cfg.n_ensemble; ++xi, ++idx) {
          out.ensemble.ref_day[idx] = r;
          out.ensemble.horizon[idx] = static_cast<int16_t>(h);
          out.ensemble.depth[idx] = static_cast<int16_t>(d);
          out.ensemble.member[idx] = static_cast<int16_t>(xi + 1);
          out.ensemble.temp[idx] =
              base + spread * walk[static_cast<size_t>(xi) * cfg.n_horizons + (h - 1)];
        }
      }
    }
  }

  for (CivilDay a = cfg.first_field_day(); a <= cfg.last_field_day(); ++a) {
    for (int d = 0; d < cfg.n_depths; ++d) {
      double v = truth_at(cfg, yf, a, d);
      if (cfg.obs_noise > 0.0) {
        SplitMix64 rng(mix_seed(cfg.seed, 0x6f6273u, static_cast<uint64_t>(a),
                                static_cast<uint64_t>(d)));
        v += cfg.obs_noise * rng.gauss();
      }
      out.field.push(a, d, v);
    }
  }
  return out;
}

}  // namespace lakegp
