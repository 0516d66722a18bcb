#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "lakegp/densegp.hpp"

namespace lakegp {

/// Conditioning structure for the Vecchia factorization: a greedy maximin
/// ordering of the training rows and, for each ordered row, up to `m` nearest
/// predecessors in coordinate-scaled distance.
struct VecchiaPlan {
  std::vector<int> order;        // maximin permutation; order[i] = original row index
  std::vector<int> nbr_offsets;  // CSR offsets, size n+1
  std::vector<int> neighbors;    // original row indices, |N(i)| = min(m, i)
  int m = 0;
  Eigen::VectorXd scaling;  // 1/sqrt(gamma_l) applied to active columns

  int n() const { return static_cast<int>(order.size()); }
};

struct VecchiaGP {
  VecchiaPlan plan;
  Hyperparams hp;
  DesignMatrix X;
  Eigen::VectorXd y;  // centered
  double y_mean = 0.0;
};

/// Greedy farthest-point (maximin) selection of `count` rows of the scaled
/// coordinates, starting from a seed-chosen row; ties break on the lowest index.
std::vector<int> maximin_select(const Eigen::MatrixXd& scaled, int count, uint64_t seed);

/// Builds the full plan: inputs are scaled by 1/sqrt(gamma), ordered by greedy
/// maximin, and each ordered row gets its m nearest predecessors.
VecchiaPlan build_plan(const DesignMatrix& X, const Hyperparams& hp, int m, uint64_t seed);

/// Vecchia log likelihood: sum of univariate conditional log densities, each
/// obtained from a dense solve of size <= m on the neighbor set.
double vecchia_loglik(const DesignMatrix& X, const Eigen::VectorXd& y, const Hyperparams& hp,
                      const VecchiaPlan& plan);

/// Two-stage scaled fit: (1) exact MLE on a maximin subsample of size
/// min(n, 2000) to get preliminary lengthscales; (2) rebuild the plan under the
/// scaled inputs and re-optimize all hyperparameters under the Vecchia
/// likelihood (tau2 profiled). The returned plan is rebuilt under the final
/// hyperparameters. Deterministic given `seed`.
VecchiaGP fit_vecchia(const DesignMatrix& X, const Eigen::VectorXd& y, int m,
                      const FitBounds& bounds, uint64_t seed, const FitControl& control);
VecchiaGP fit_vecchia(const DesignMatrix& X, const Eigen::VectorXd& y, int m,
                      const FitBounds& bounds, uint64_t seed);

/// Refreshes the training set of a fitted model without re-estimating
/// hyperparameters; the plan is rebuilt from the new data under the frozen
/// hyperparameters.
void vecchia_set_data(VecchiaGP& gp, const DesignMatrix& X, const Eigen::VectorXd& y,
                      uint64_t seed, bool rebuild_plan);

/// Warm re-optimization of hyperparameters on the current data, starting from
/// the stored values (used by scheduled refits).
void vecchia_reoptimize(VecchiaGP& gp, const FitBounds& bounds, uint64_t seed, int max_evals);

/// Per-point conditional moments given the m nearest training observations in
/// scaled distance (diagonal variance only). PI adds tau2*g at the new point.
PredictiveMoments predict_vecchia(const VecchiaGP& gp, const DesignMatrix& Xnew, Scale scale);

}  // namespace lakegp
