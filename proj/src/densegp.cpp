#include "lakegp/densegp.hpp"

#include <cmath>

#include "lakegp/linalg.hpp"
#include "lakegp/optim.hpp"
#include "lakegp/rng.hpp"

namespace lakegp {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
}

double log_likelihood(const DesignMatrix& X, const Eigen::VectorXd& y, const Hyperparams& hp) {
  const int n = X.n();
  if (n < 1) throw ContractError("log_likelihood: empty design");
  if (y.size() != n) throw ContractError("log_likelihood: response length mismatch");
  hp.validate(X.active_dims());
  Eigen::MatrixXd c = corr_matrix(X.active_block(), hp.gamma, hp.g, true);
  CholFactor f = jittered_cholesky(c, 1.0);
  Eigen::VectorXd alpha = chol_solve(f.lower, y);
  const double quad = y.dot(alpha) / hp.tau2;
  const double logdet = n * std::log(hp.tau2) + chol_logdet(f.lower);
  return -0.5 * logdet - 0.5 * quad - 0.5 * n * kLog2Pi;
}

FitBounds default_bounds(const DesignMatrix& X) {
  const int k = X.active_dims();
  FitBounds b;
  b.gamma_lo.resize(k);
  b.gamma_hi.resize(k);
  Eigen::MatrixXd a = X.active_block();
  for (int l = 0; l < k; ++l) {
    double range = a.col(l).maxCoeff() - a.col(l).minCoeff();
    if (!(range > 0.0)) range = 1.0;
    b.gamma_lo[l] = 1e-4 * range * range;
    b.gamma_hi[l] = 1e6 * range * range;
  }
  return b;
}

FitControl FitControl::for_n(int n) {
  FitControl c;
  if (n > 1500) {
    // Dense factorizations dominate at this size; trade restarts for runtime.
    c.n_starts = 2;
    c.max_evals = 120;
    c.xtol_abs = 1e-3;
    c.ftol_rel = 1e-8;
  }
  return c;
}

double profiled_neg_loglik(const Eigen::MatrixXd& A, const Eigen::VectorXd& y,
                           const Eigen::VectorXd& gamma, double g, double* tau2hat) {
  const int n = static_cast<int>(A.rows());
  Eigen::MatrixXd c = corr_matrix(A, gamma, g, true);
  CholFactor f = jittered_cholesky(c, 1.0);
  Eigen::VectorXd alpha = chol_solve(f.lower, y);
  double t2 = y.dot(alpha) / n;
  if (!(t2 > 1e-300)) t2 = 1e-300;
  if (tau2hat != nullptr) *tau2hat = t2;
  return 0.5 * chol_logdet(f.lower) + 0.5 * n * (std::log(t2) + 1.0 + kLog2Pi);
}

DenseGP make_dense_gp(const DesignMatrix& X, const Eigen::VectorXd& y, const Hyperparams& hp) {
  hp.validate(X.active_dims());
  DenseGP gp;
  gp.X = X;
  gp.y_mean = y.mean();
  gp.y = y.array() - gp.y_mean;
  gp.hp = hp;
  Eigen::MatrixXd c = corr_matrix(X.active_block(), hp.gamma, hp.g, true);
  CholFactor f = jittered_cholesky(c, 1.0);
  gp.chol = std::move(f.lower);
  gp.jitter = f.jitter;
  gp.alpha = chol_solve(gp.chol, gp.y);
  return gp;
}

DenseGP fit_mle(const DesignMatrix& X, const Eigen::VectorXd& y, const FitBounds& bounds,
                uint64_t seed, const FitControl& control) {
  const int n = X.n();
  const int k = X.active_dims();
  if (n < 3) throw ContractError("fit_mle: need at least 3 observations");
  if (y.size() != n) throw ContractError("fit_mle: response length mismatch");
  if (bounds.gamma_lo.size() != k || bounds.gamma_hi.size() != k)
    throw ContractError("fit_mle: bounds dimension mismatch");

  const Eigen::MatrixXd a = X.active_block();
  const double ybar = y.mean();
  const Eigen::VectorXd yc = y.array() - ybar;

  Eigen::VectorXd lo(k + 1), hi(k + 1);
  for (int l = 0; l < k; ++l) {
    lo[l] = std::log(bounds.gamma_lo[l]);
    hi[l] = std::log(bounds.gamma_hi[l]);
  }
  lo[k] = std::log(bounds.g_lo);
  hi[k] = std::log(bounds.g_hi);

  auto objective = [&](const Eigen::VectorXd& z) {
    Eigen::VectorXd gamma(k);
    for (int l = 0; l < k; ++l) gamma[l] = std::exp(z[l]);
    return profiled_neg_loglik(a, yc, gamma, std::exp(z[k]), nullptr);
  };

  NmOptions nm;
  nm.max_evals = control.max_evals;
  nm.ftol_rel = control.ftol_rel;
  nm.xtol_abs = control.xtol_abs;
  MultiStartResult best =
      multistart_minimize(objective, lo, hi, {}, control.n_starts, mix_seed(seed, 0x6d5e), nm);
  if (!(best.fval < 1e29)) throw FitError("fit_mle: all start points failed numerically");

  Hyperparams hp;
  hp.gamma.resize(k);
  for (int l = 0; l < k; ++l) hp.gamma[l] = std::exp(best.x[l]);
  hp.g = std::exp(best.x[k]);
  double tau2 = 1.0;
  profiled_neg_loglik(a, yc, hp.gamma, hp.g, &tau2);
  hp.tau2 = std::max(tau2, 1e-12);
  return make_dense_gp(X, y, hp);
}

DenseGP fit_mle(const DesignMatrix& X, const Eigen::VectorXd& y, const FitBounds& bounds,
                uint64_t seed) {
  return fit_mle(X, y, bounds, seed, FitControl::for_n(X.n()));
}

void dense_reoptimize(DenseGP& gp, const FitBounds& bounds, int max_evals) {
  const int k = gp.X.active_dims();
  const Eigen::MatrixXd a = gp.X.active_block();

  Eigen::VectorXd lo(k + 1), hi(k + 1);
  for (int l = 0; l < k; ++l) {
    lo[l] = std::log(bounds.gamma_lo[l]);
    hi[l] = std::log(bounds.gamma_hi[l]);
  }
  lo[k] = std::log(bounds.g_lo);
  hi[k] = std::log(bounds.g_hi);

  auto objective = [&](const Eigen::VectorXd& z) {
    Eigen::VectorXd gamma(k);
    for (int l = 0; l < k; ++l) gamma[l] = std::exp(z[l]);
    return profiled_neg_loglik(a, gp.y, gamma, std::exp(z[k]), nullptr);
  };

  Eigen::VectorXd z0(k + 1);
  for (int l = 0; l < k; ++l) z0[l] = std::log(gp.hp.gamma[l]);
  z0[k] = std::log(std::max(gp.hp.g, bounds.g_lo));

  NmOptions nm;
  nm.max_evals = max_evals;
  nm.xtol_abs = 2e-3;
  nm.ftol_rel = 1e-8;
  NmResult r = nelder_mead(objective, z0.cwiseMax(lo).cwiseMin(hi), lo, hi, nm);
  if (!(r.fval < 1e29)) throw FitError("dense_reoptimize: optimization failed");

  Hyperparams hp = gp.hp;
  for (int l = 0; l < k; ++l) hp.gamma[l] = std::exp(r.x[l]);
  hp.g = std::exp(r.x[k]);
  double tau2 = 1.0;
  profiled_neg_loglik(a, gp.y, hp.gamma, hp.g, &tau2);
  hp.tau2 = std::max(tau2, 1e-12);
  const Eigen::VectorXd y_raw = gp.y.array() + gp.y_mean;
  gp = make_dense_gp(gp.X, y_raw, hp);
}

PredictiveMoments predict(const DenseGP& gp, const DesignMatrix& Xnew, Scale scale) {
  gp.X.check_roles_match(Xnew, "predict");
  const int np = Xnew.n();
  Eigen::MatrixXd v = corr_cross(gp.X.active_block(), Xnew.active_block(), gp.hp.gamma);
  PredictiveMoments out;
  out.scale = scale;
  out.mean = (v.transpose() * gp.alpha).array() + gp.y_mean;
  Eigen::MatrixXd w = gp.chol.triangularView<Eigen::Lower>().solve(v);
  out.var.resize(np);
  const double tau2 = gp.hp.tau2;
  const double nug = gp.hp.tau2 * gp.hp.g;
  for (int j = 0; j < np; ++j) {
    double ci = tau2 * std::max(0.0, 1.0 - w.col(j).squaredNorm());
    out.var[j] = scale == Scale::CI ? ci : ci + nug;
  }
  return out;
}

}  // namespace lakegp
