#pragma once

#include <Eigen/Core>

#include "lakegp/covkernel.hpp"
#include "lakegp/design.hpp"

namespace lakegp {

enum class Scale { CI, PI };

/// Pointwise predictive mean and variance. `scale` records whether the
/// variance is for the latent mean (CI) or a new noisy observation (PI).
struct PredictiveMoments {
  Eigen::VectorXd mean;
  Eigen::VectorXd var;
  Scale scale = Scale::PI;
};

/// Exact GP fit. `y` is stored centered; `chol` is the lower Cholesky factor
/// of the correlation-scale K + gI (the tau2 factor is carried separately in hp).
struct DenseGP {
  DesignMatrix X;
  Eigen::VectorXd y;
  double y_mean = 0.0;
  Hyperparams hp;
  Eigen::MatrixXd chol;
  Eigen::VectorXd alpha;  // (K + gI)^{-1} y
  double jitter = 0.0;
};

/// Exact MVN log density: -1/2 log|Σ| - 1/2 yᵀΣ⁻¹y - (n/2) log 2π with
/// Σ = τ²(K + gI), computed through a Cholesky factorization.
double log_likelihood(const DesignMatrix& X, const Eigen::VectorXd& y, const Hyperparams& hp);

/// Box bounds for hyperparameter search, on the natural scale.
struct FitBounds {
  Eigen::VectorXd gamma_lo, gamma_hi;
  double g_lo = 1e-8;
  double g_hi = 10.0;
};

/// Scale-aware defaults: gamma_l in [1e-4, 1e6]·range_l², g in [1e-8, 10].
FitBounds default_bounds(const DesignMatrix& X);

struct FitControl {
  int n_starts = 5;    // Latin-hypercube restarts
  int max_evals = 300; // per start
  double ftol_rel = 1e-9;
  double xtol_abs = 1e-5;

  static FitControl for_n(int n);
};

/// Maximum-likelihood fit via multi-start Nelder–Mead on log(gamma, g) with tau2
/// profiled out analytically. Deterministic given `seed`; the best start wins,
/// ties broken by start index. The response is centered internally.
DenseGP fit_mle(const DesignMatrix& X, const Eigen::VectorXd& y, const FitBounds& bounds,
                uint64_t seed, const FitControl& control);
DenseGP fit_mle(const DesignMatrix& X, const Eigen::VectorXd& y, const FitBounds& bounds,
                uint64_t seed);

/// Rebuilds the cached factorization for known hyperparameters (used when
/// reconstituting persisted fits). Centers y internally.
DenseGP make_dense_gp(const DesignMatrix& X, const Eigen::VectorXd& y, const Hyperparams& hp);

/// Kriging mean and variance at new inputs. PI includes the nugget at the new
/// points; CI drops it there while keeping it inside the training inverse, so
/// var_PI - var_CI == tau2*g exactly.
PredictiveMoments predict(const DenseGP& gp, const DesignMatrix& Xnew, Scale scale);

/// Warm re-optimization from the stored hyperparameters on the current data
/// (used by scheduled refits).
void dense_reoptimize(DenseGP& gp, const FitBounds& bounds, int max_evals);

// Profiled negative log likelihood used by the optimizer: tau2hat = yᵀC⁻¹y/n.
// Exposed for the Vecchia module's preliminary stage.
double profiled_neg_loglik(const Eigen::MatrixXd& A, const Eigen::VectorXd& y,
                           const Eigen::VectorXd& gamma, double g, double* tau2hat);

}  // namespace lakegp
