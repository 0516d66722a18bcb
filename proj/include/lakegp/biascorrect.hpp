#pragma once

#include "lakegp/surrogate.hpp"

namespace lakegp {

/// Field values aligned to collapsed simulator inputs: row i of the design gets
/// the sensor observation at calendar date (year, day) + horizon and the row's
/// depth; rows without an observation are masked out.
struct AlignedField {
  Eigen::VectorXd value;
  std::vector<char> mask;  // 1 = observation present
};

AlignedField align_field(const DesignMatrix& Xbar, const FieldSeries& field, int base_year);

/// Horizon-aligned discrepancies: aligned field value minus the surrogate mean,
/// at every unmasked collapsed input. `mu_sk` may be passed precomputed (cached
/// surrogate means at the Xbar rows); when null it is predicted here.
struct DiscrepancyData {
  DesignMatrix X;
  Eigen::VectorXd y;
};

DiscrepancyData build_discrepancies(const HetSurrogate& s, const ReplicateSet& rs,
                                    const FieldSeries& field, int base_year,
                                    const Eigen::VectorXd* mu_sk = nullptr);

/// Homoskedastic GP on the discrepancies (single nugget; Vecchia above the
/// dense threshold).
struct BiasModel {
  GpModel gp;
};

BiasModel fit_bias(const DiscrepancyData& disc, int m, const FitBounds& bounds, uint64_t seed);
BiasModel fit_bias(const DiscrepancyData& disc, int m, uint64_t seed);

/// Bias-corrected surrogate moments: mean = surrogate SK mean + bias mean,
/// variance = surrogate SK_CI variance + bias PI variance (no cross-covariance
/// subtraction).
PredictiveMoments predict_gpbc(const HetSurrogate& s, const BiasModel& b,
                               const DesignMatrix& Xnew);

}  // namespace lakegp
