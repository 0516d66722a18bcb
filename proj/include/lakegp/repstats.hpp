#pragma once

#include <Eigen/Core>

#include "lakegp/data.hpp"
#include "lakegp/design.hpp"

namespace lakegp {

/// Replicated simulator output collapsed to unique-input sufficient statistics:
/// per-input means, sample variances, and replicate counts. The ensemble column
/// is dropped; rows are ordered lexicographically by (year, day, horizon, depth).
struct ReplicateSet {
  DesignMatrix Xbar;  // columns: day, depth, horizon, year; active = {day, depth, horizon}
  Eigen::VectorXd ybar;
  Eigen::VectorXd s2;
  Eigen::VectorXi counts;

  int n() const { return Xbar.n(); }
};

/// Groups raw rows by exact (year, day-of-year, horizon, depth) and computes the
/// first two replicate moments. The year index is year(ref_day) - base_year.
/// Throws ContractError naming the offending input if any group is a singleton.
ReplicateSet collapse(const RawEnsemble& raw, int base_year);

/// Squared standard errors of the replicate means: s2_i / n_i.
Eigen::VectorXd standard_errors(const ReplicateSet& rs);

}  // namespace lakegp
