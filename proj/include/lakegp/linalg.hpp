#pragma once

#include <Eigen/Core>

#include "lakegp/common.hpp"

namespace lakegp {

// In-place lower Cholesky. Blocked and tile-parallel for large n; every output
// element is produced by one thread with a fixed loop order, so results are
// identical for any worker count. Returns false on a non-positive pivot.
bool cholesky_in_place(Eigen::MatrixXd& a);

struct CholFactor {
  Eigen::MatrixXd lower;
  double jitter = 0.0;  // total diagonal jitter that was required, 0 normally
};

// Factor `a`, applying the jitter policy on failure: add 1e-8*scale to the
// diagonal, escalating x10 up to 3 retries, then throw NumericError.
CholFactor jittered_cholesky(const Eigen::MatrixXd& a, double scale);

// Solve L L^T x = b.
Eigen::VectorXd chol_solve(const Eigen::MatrixXd& lower, const Eigen::VectorXd& b);
Eigen::MatrixXd chol_solve(const Eigen::MatrixXd& lower, const Eigen::MatrixXd& b);

// log det(L L^T) = 2 sum log diag(L).
double chol_logdet(const Eigen::MatrixXd& lower);

}  // namespace lakegp
