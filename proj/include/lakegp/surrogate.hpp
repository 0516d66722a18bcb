#pragma once

#include <variant>

#include "lakegp/repstats.hpp"
#include "lakegp/vecchia.hpp"

namespace lakegp {

/// A fitted GP behind a single predict/hyperparameter surface; dense below
/// kDenseThreshold rows, Vecchia above.
struct GpModel {
  std::variant<DenseGP, VecchiaGP> impl;

  bool is_dense() const { return std::holds_alternative<DenseGP>(impl); }
  const Hyperparams& hp() const;
  double y_mean() const;
  int n() const;
  PredictiveMoments predict(const DesignMatrix& Xnew, Scale scale) const;
};

GpModel fit_gp_auto(const DesignMatrix& X, const Eigen::VectorXd& y, int m,
                    const FitBounds& bounds, uint64_t seed);

/// Swaps in grown training data without touching hyperparameters. Vecchia plans
/// are left stale; they are rebuilt by the next reoptimize.
void gp_set_data(GpModel& model, const DesignMatrix& X, const Eigen::VectorXd& y, uint64_t seed);

/// Warm hyperparameter re-estimation on the current data; promotes a dense
/// model to Vecchia when it has outgrown the dense threshold.
void gp_reoptimize(GpModel& model, int m, const FitBounds& bounds, uint64_t seed, int max_evals);

/// Reconstitutes a fitted model from persisted hyperparameters plus the
/// deterministic training data (no optimization).
GpModel gp_from_params(const DesignMatrix& X, const Eigen::VectorXd& y, const Hyperparams& hp,
                       bool dense, int m);

/// Heteroskedastic simulator surrogate: a GP on replicate means and a GP on
/// square-root replicate variances, combined through the smoothed-variance
/// stochastic-kriging moments.
struct HetSurrogate {
  GpModel mean_gp;  // fit to (Xbar, ybar)
  GpModel var_gp;   // fit to (Xbar, sqrt(s2))
  int rep_count = 0;
  double q95_mult = kQ95;
};

enum class SkMode { SK_CI, SK_PI };

/// Fits both GPs on the collapsed campaign. Requires uniform replication and
/// n >= 10. Deterministic given seed.
HetSurrogate fit_surrogate(const ReplicateSet& rs, int m, const FitBounds& bounds, uint64_t seed);
HetSurrogate fit_surrogate(const ReplicateSet& rs, int m, uint64_t seed);

/// Back-transformed 95th quantile of the variance-GP prediction:
/// (max(0, mu_v + 1.6449 * sd_v))^2 with sd_v on the CI scale.
Eigen::VectorXd v95(const HetSurrogate& s, const DesignMatrix& Xnew);

/// Surrogate moments. Mean is the mean-GP prediction. Variance is
/// v95/n_i + var_mean(CI) for SK_CI, and v95 + var_mean(CI) for SK_PI.
PredictiveMoments predict_surrogate(const HetSurrogate& s, const DesignMatrix& Xnew, SkMode mode);

/// Exact stochastic-kriging oracle on the replicate moments (dense-only,
/// n <= 2000): kriging with the smoothed per-input noise diag(T^{-1}(mu_v)/n_i)
/// inside the inverse. PI adds the back-transformed variance prediction at the
/// new points; CI omits it.
PredictiveMoments sk_reference(const ReplicateSet& rs, const Hyperparams& hp,
                               const GpModel& var_gp, const DesignMatrix& Xnew, Scale scale);

}  // namespace lakegp
