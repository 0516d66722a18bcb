#include "lakegp/linalg.hpp"

#include <cmath>

#include <Eigen/Dense>

namespace lakegp {

namespace {

constexpr int kBlock = 160;

// Unblocked lower Cholesky on an in-place view.
bool chol_unblocked(Eigen::Ref<Eigen::MatrixXd> a) {
  const int n = static_cast<int>(a.rows());
  for (int j = 0; j < n; ++j) {
    double d = a(j, j);
    for (int k = 0; k < j; ++k) d -= a(j, k) * a(j, k);
    if (!(d > 0.0) || !std::isfinite(d)) return false;
    d = std::sqrt(d);
    a(j, j) = d;
    const double inv = 1.0 / d;
    for (int i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (int k = 0; k < j; ++k) s -= a(i, k) * a(j, k);
      a(i, j) = s * inv;
    }
  }
  return true;
}

}  // namespace

bool cholesky_in_place(Eigen::MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  if (n <= 2 * kBlock) return chol_unblocked(a);

  bool ok = true;
  for (int k = 0; k < n && ok; k += kBlock) {
    const int nb = std::min(kBlock, n - k);
    if (!chol_unblocked(a.block(k, k, nb, nb))) {
      ok = false;
      break;
    }
    const int rest = n - k - nb;
    if (rest == 0) break;
    auto l11 = a.block(k, k, nb, nb);
    // Panel solve: rows below the diagonal block, tile-parallel.
    const int nr_tiles = (rest + kBlock - 1) / kBlock;
#pragma omp parallel for schedule(static)
    for (int t = 0; t < nr_tiles; ++t) {
      const int r0 = k + nb + t * kBlock;
      const int nr = std::min(kBlock, n - r0);
      l11.transpose()
          .triangularView<Eigen::Upper>()
          .solveInPlace<Eigen::OnTheRight>(a.block(r0, k, nr, nb));
    }
    // Trailing update C -= L21 L21^T on the lower triangle, tile-parallel with a
    // fixed per-tile evaluation order.
#pragma omp parallel for collapse(2) schedule(static)
    for (int ti = 0; ti < nr_tiles; ++ti) {
      for (int tj = 0; tj < nr_tiles; ++tj) {
        if (tj > ti) continue;
        const int i0 = k + nb + ti * kBlock;
        const int j0 = k + nb + tj * kBlock;
        const int ni = std::min(kBlock, n - i0);
        const int nj = std::min(kBlock, n - j0);
        a.block(i0, j0, ni, nj).noalias() -=
            a.block(i0, k, ni, nb) * a.block(j0, k, nj, nb).transpose();
      }
    }
  }
  return ok;
}

CholFactor jittered_cholesky(const Eigen::MatrixXd& a, double scale) {
  double jitter = 0.0;
  double step = 1e-8 * scale;
  for (int attempt = 0; attempt <= 3; ++attempt) {
    Eigen::MatrixXd work = a;
    if (jitter > 0.0) work.diagonal().array() += jitter;
    if (cholesky_in_place(work)) {
      work.triangularView<Eigen::StrictlyUpper>().setZero();
      return {std::move(work), jitter};
    }
    jitter += step;
    step *= 10.0;
  }
  throw NumericError("covariance not positive definite after jitter policy (n=" +
                     std::to_string(a.rows()) + ")");
}

Eigen::VectorXd chol_solve(const Eigen::MatrixXd& lower, const Eigen::VectorXd& b) {
  Eigen::VectorXd x = lower.triangularView<Eigen::Lower>().solve(b);
  lower.transpose().triangularView<Eigen::Upper>().solveInPlace(x);
  return x;
}

Eigen::MatrixXd chol_solve(const Eigen::MatrixXd& lower, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd x = lower.triangularView<Eigen::Lower>().solve(b);
  lower.transpose().triangularView<Eigen::Upper>().solveInPlace(x);
  return x;
}

double chol_logdet(const Eigen::MatrixXd& lower) {
  return 2.0 * lower.diagonal().array().log().sum();
}

}  // namespace lakegp
