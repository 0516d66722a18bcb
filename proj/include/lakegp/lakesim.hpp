#pragma once

#include "lakegp/data.hpp"

namespace lakegp {

/// Synthetic stand-in for the ensemble-driven simulator plus matching sensor
/// truth. Everything is a deterministic function of the seed; generation is
/// parallel across reference dates with per-date substreams.
struct SimConfig {
  uint64_t seed = 42;
  CivilDay start = to_civil(2020, 1, 1);  // first reference date
  int n_ref_days = 365;    // span of candidate reference dates, consecutive
  int ref_stride = 1;      // keep every k-th day of the span
  int dense_from = -1;     // offset from `start`; from here on all days are kept
  int n_depths = 10;
  int n_horizons = 30;
  int n_ensemble = 31;
  double mean_temp = 14.0;
  double seasonal_amp = 10.0;
  double depth_damp = 0.12;        // e-folding of seasonal swing per meter of depth
  double year_amp = 1.5;           // smooth year-differentiating perturbation
  double spread_growth = 0.12;     // member deviation sd per sqrt(day), surface
  double spread_depth_damp = 0.12;
  double bias_const = 0.0;         // bias(t,d,h) = const + seasonal*sin(2pi t/365)*(h/hmax)
  double bias_seasonal = 0.0;      //              + depth*(d/(n_depths-1))
  double bias_depth = 0.0;
  double obs_noise = 0.5;          // sensor noise sd
  int field_lead_days = 8;         // sensor record starts this many days early
  int field_back_days = 0;         // additional sensor history before the lead
  int anomaly_start = -1;          // offset from `start`; -1 disables
  int anomaly_len = 0;
  double anomaly_amp = 0.0;

  void validate() const;
  CivilDay first_field_day() const { return start - field_lead_days - field_back_days; }
  CivilDay last_field_day() const { return start + n_ref_days - 1 + n_horizons; }
};

struct Campaign {
  RawEnsemble ensemble;
  FieldSeries field;
};

/// Noiseless truth used to generate the campaign; exposed for tests.
double truth_oracle(const SimConfig& cfg, CivilDay date, int depth);

/// Injected simulator bias as a function of reference day-of-year, depth, horizon.
double injected_bias(const SimConfig& cfg, int t_doy, int depth, int horizon);

Campaign generate_campaign(const SimConfig& cfg);

}  // namespace lakegp
