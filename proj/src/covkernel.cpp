#include "lakegp/covkernel.hpp"

#include <cmath>

namespace lakegp {

namespace {
constexpr double kSqrt7 = 2.6457513110645905905;
constexpr double kC2 = 14.0 / 5.0;
constexpr double kC3 = 7.0 * kSqrt7 / 15.0;

inline double sq_scaled_dist(const double* a, const double* b, const double* inv_gamma, int k) {
  double s = 0.0;
  for (int l = 0; l < k; ++l) {
    const double d = a[l] - b[l];
    s += d * d * inv_gamma[l];
  }
  return s;
}
}  // namespace

void Hyperparams::validate(int active_dims) const {
  if (gamma.size() != active_dims)
    throw ContractError("Hyperparams: gamma length " + std::to_string(gamma.size()) +
                        " does not match active dimension count " + std::to_string(active_dims));
  for (int l = 0; l < gamma.size(); ++l)
    if (!(gamma[l] > 0.0)) throw ContractError("Hyperparams: gamma must be positive");
  if (!(tau2 > 0.0)) throw ContractError("Hyperparams: tau2 must be positive");
  if (!(g >= 0.0)) throw ContractError("Hyperparams: nugget g must be nonnegative");
}

double scaled_distance(const Eigen::VectorXd& x1, const Eigen::VectorXd& x2,
                       const Eigen::VectorXd& gamma) {
  if (x1.size() != x2.size() || x1.size() != gamma.size())
    throw ContractError("scaled_distance: dimension mismatch");
  double s = 0.0;
  for (int l = 0; l < gamma.size(); ++l) {
    const double d = x1[l] - x2[l];
    s += d * d / gamma[l];
  }
  return std::sqrt(s);
}

double matern35(double q) {
  if (!(q >= 0.0)) throw ContractError("matern35: distance must be nonnegative");
  const double a = kSqrt7 * q;
  return (1.0 + a + kC2 * q * q + kC3 * q * q * q) * std::exp(-a);
}

Eigen::MatrixXd corr_matrix(const Eigen::MatrixXd& A, const Eigen::VectorXd& gamma, double g,
                            bool add_nugget) {
  const int n = static_cast<int>(A.rows());
  const int k = static_cast<int>(A.cols());
  Eigen::VectorXd inv_gamma = gamma.cwiseInverse();
  // Row-major copy so per-row pointers stride contiguously.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> R = A;
  Eigen::MatrixXd out(n, n);
  const double diag = add_nugget ? 1.0 + g : 1.0;
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    const double* ri = R.data() + static_cast<ptrdiff_t>(i) * k;
    for (int j = 0; j < i; ++j) {
      const double q2 = sq_scaled_dist(ri, R.data() + static_cast<ptrdiff_t>(j) * k,
                                       inv_gamma.data(), k);
      const double q = std::sqrt(q2);
      const double a = kSqrt7 * q;
      out(i, j) = (1.0 + a + kC2 * q2 + kC3 * q2 * q) * std::exp(-a);
    }
    out(i, i) = diag;
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) out(i, j) = out(j, i);
  return out;
}

Eigen::MatrixXd corr_cross(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                           const Eigen::VectorXd& gamma) {
  const int n = static_cast<int>(A.rows());
  const int np = static_cast<int>(B.rows());
  const int k = static_cast<int>(A.cols());
  Eigen::VectorXd inv_gamma = gamma.cwiseInverse();
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> Ra = A;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> Rb = B;
  Eigen::MatrixXd out(n, np);
#pragma omp parallel for schedule(static)
  for (int j = 0; j < np; ++j) {
    const double* rb = Rb.data() + static_cast<ptrdiff_t>(j) * k;
    for (int i = 0; i < n; ++i) {
      const double q2 = sq_scaled_dist(Ra.data() + static_cast<ptrdiff_t>(i) * k, rb,
                                       inv_gamma.data(), k);
      const double q = std::sqrt(q2);
      const double a = kSqrt7 * q;
      out(i, j) = (1.0 + a + kC2 * q2 + kC3 * q2 * q) * std::exp(-a);
    }
  }
  return out;
}

Eigen::MatrixXd cov_matrix(const DesignMatrix& X, const Hyperparams& hp, bool add_nugget) {
  if (X.n() < 1) throw ContractError("cov_matrix: empty design");
  hp.validate(X.active_dims());
  return hp.tau2 * corr_matrix(X.active_block(), hp.gamma, hp.g, add_nugget);
}

Eigen::MatrixXd cross_cov(const DesignMatrix& X, const DesignMatrix& Xnew, const Hyperparams& hp) {
  X.check_roles_match(Xnew, "cross_cov");
  hp.validate(X.active_dims());
  return hp.tau2 * corr_cross(X.active_block(), Xnew.active_block(), hp.gamma);
}

}  // namespace lakegp
