#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "lakegp/common.hpp"

namespace lakegp {

// Semantic role of a design-matrix column. Year and Ensemble are bookkeeping
// only and are never distance-active.
enum class Col { Day, Depth, Horizon, Phi, Year, Ensemble };

inline const char* col_name(Col c) {
  switch (c) {
    case Col::Day: return "day";
    case Col::Depth: return "depth";
    case Col::Horizon: return "horizon";
    case Col::Phi: return "phi";
    case Col::Year: return "year";
    case Col::Ensemble: return "ensemble";
  }
  return "?";
}

/// Forecast-indexed covariates. `active` lists the columns that participate in
/// kernel distances, in the order the lengthscale vector indexes them.
struct DesignMatrix {
  Eigen::MatrixXd values;   // n x p
  std::vector<Col> roles;   // size p
  std::vector<int> active;  // indices into columns, distance-active subset

  int n() const { return static_cast<int>(values.rows()); }
  int p() const { return static_cast<int>(values.cols()); }
  int active_dims() const { return static_cast<int>(active.size()); }

  int col_of(Col role) const {
    for (int j = 0; j < p(); ++j)
      if (roles[j] == role) return j;
    return -1;
  }

  // Gathers the distance-active columns into a dense n x k block.
  Eigen::MatrixXd active_block() const {
    Eigen::MatrixXd out(n(), active_dims());
    for (int k = 0; k < active_dims(); ++k) out.col(k) = values.col(active[k]);
    return out;
  }

  DesignMatrix rows(const std::vector<int>& idx) const {
    DesignMatrix out;
    out.roles = roles;
    out.active = active;
    out.values.resize(static_cast<int>(idx.size()), p());
    for (size_t i = 0; i < idx.size(); ++i) out.values.row(static_cast<int>(i)) = values.row(idx[i]);
    return out;
  }

  void check_roles_match(const DesignMatrix& other, const char* where) const {
    if (roles != other.roles || active != other.active)
      throw ContractError(std::string(where) + ": design-matrix column roles do not match");
  }
};

inline DesignMatrix make_design(Eigen::MatrixXd values, std::vector<Col> roles,
                                std::vector<int> active) {
  if (static_cast<int>(roles.size()) != values.cols())
    throw ContractError("make_design: role count does not match column count");
  for (int j : active) {
    if (j < 0 || j >= values.cols()) throw ContractError("make_design: active index out of range");
    if (roles[j] == Col::Year || roles[j] == Col::Ensemble)
      throw ContractError("make_design: bookkeeping columns cannot be distance-active");
  }
  DesignMatrix d;
  d.values = std::move(values);
  d.roles = std::move(roles);
  d.active = std::move(active);
  return d;
}

}  // namespace lakegp
