#pragma once

#include <Eigen/Core>

#include "lakegp/design.hpp"

namespace lakegp {

/// GP covariance hyperparameters. `gamma` holds one squared-lengthscale
/// denominator per distance-active input dimension; `tau2` is the process
/// scale and `g` the (dimensionless) nugget fraction.
struct Hyperparams {
  Eigen::VectorXd gamma;
  double tau2 = 1.0;
  double g = 0.0;

  void validate(int active_dims) const;
};

/// Anisotropically scaled Euclidean distance ( sum_l |x1l-x2l|^2 / gamma_l )^(1/2).
/// Inputs are the distance-active coordinates; lengths must match gamma.
double scaled_distance(const Eigen::VectorXd& x1, const Eigen::VectorXd& x2,
                       const Eigen::VectorXd& gamma);

/// Matérn correlation with smoothness 7/2 as a function of scaled distance q >= 0:
///   (1 + √7 q + (14/5) q² + (7√7/15) q³) · exp(−√7 q).
/// Monotone decreasing, equals 1 at q = 0, stays in (0, 1].
double matern35(double q);

/// n x n covariance: diagonal τ²(1+g) with the nugget, τ² without; off-diagonal
/// τ²·matern35(q).
Eigen::MatrixXd cov_matrix(const DesignMatrix& X, const Hyperparams& hp, bool add_nugget);

/// n x n' cross covariance between training and prediction inputs. Carries no
/// nugget on any entry.
Eigen::MatrixXd cross_cov(const DesignMatrix& X, const DesignMatrix& Xnew, const Hyperparams& hp);

// Correlation-scale internals shared by the GP modules. `A` are pre-gathered
// active coordinates; entries are matern35(q) with optional (1+g) diagonal.
Eigen::MatrixXd corr_matrix(const Eigen::MatrixXd& A, const Eigen::VectorXd& gamma, double g,
                            bool add_nugget);
Eigen::MatrixXd corr_cross(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                           const Eigen::VectorXd& gamma);

}  // namespace lakegp
