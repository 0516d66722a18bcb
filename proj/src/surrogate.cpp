#include "lakegp/surrogate.hpp"

#include <cmath>

#include "lakegp/linalg.hpp"
#include "lakegp/rng.hpp"

namespace lakegp {

const Hyperparams& GpModel::hp() const {
  return is_dense() ? std::get<DenseGP>(impl).hp : std::get<VecchiaGP>(impl).hp;
}

double GpModel::y_mean() const {
  return is_dense() ? std::get<DenseGP>(impl).y_mean : std::get<VecchiaGP>(impl).y_mean;
}

int GpModel::n() const {
  return is_dense() ? std::get<DenseGP>(impl).X.n() : std::get<VecchiaGP>(impl).X.n();
}

PredictiveMoments GpModel::predict(const DesignMatrix& Xnew, Scale scale) const {
  if (is_dense()) return lakegp::predict(std::get<DenseGP>(impl), Xnew, scale);
  return predict_vecchia(std::get<VecchiaGP>(impl), Xnew, scale);
}

GpModel fit_gp_auto(const DesignMatrix& X, const Eigen::VectorXd& y, int m,
                    const FitBounds& bounds, uint64_t seed) {
  GpModel model;
  if (X.n() > kDenseThreshold)
    model.impl = fit_vecchia(X, y, m, bounds, seed);
  else
    model.impl = fit_mle(X, y, bounds, seed);
  return model;
}

void gp_set_data(GpModel& model, const DesignMatrix& X, const Eigen::VectorXd& y, uint64_t seed) {
  if (model.is_dense()) {
    DenseGP& gp = std::get<DenseGP>(model.impl);
    gp = make_dense_gp(X, y, gp.hp);
  } else {
    vecchia_set_data(std::get<VecchiaGP>(model.impl), X, y, seed, false);
  }
}

void gp_reoptimize(GpModel& model, int m, const FitBounds& bounds, uint64_t seed, int max_evals) {
  if (model.is_dense()) {
    DenseGP& gp = std::get<DenseGP>(model.impl);
    if (gp.X.n() > kDenseThreshold) {
      const Eigen::VectorXd y_raw = gp.y.array() + gp.y_mean;
      model.impl = fit_vecchia(gp.X, y_raw, m, bounds, seed);
    } else {
      dense_reoptimize(gp, bounds, max_evals);
    }
  } else {
    vecchia_reoptimize(std::get<VecchiaGP>(model.impl), bounds, seed, max_evals);
  }
}

GpModel gp_from_params(const DesignMatrix& X, const Eigen::VectorXd& y, const Hyperparams& hp,
                       bool dense, int m) {
  GpModel model;
  if (dense) {
    model.impl = make_dense_gp(X, y, hp);
  } else {
    VecchiaGP gp;
    gp.hp = hp;
    gp.plan.m = m;
    gp.X = X;
    gp.y_mean = y.mean();
    gp.y = y.array() - gp.y_mean;
    model.impl = std::move(gp);
  }
  return model;
}

HetSurrogate fit_surrogate(const ReplicateSet& rs, int m, const FitBounds& bounds,
                           uint64_t seed) {
  const int n = rs.n();
  if (n < 10) throw ContractError("fit_surrogate: need at least 10 unique inputs");
  for (int i = 0; i < n; ++i)
    if (rs.counts[i] != rs.counts[0])
      throw ContractError("fit_surrogate: replication must be uniform (count " +
                          std::to_string(rs.counts[i]) + " != " + std::to_string(rs.counts[0]) +
                          " at row " + std::to_string(i) + ")");
  if (rs.counts[0] < 2) throw ContractError("fit_surrogate: replicate counts must be >= 2");

  HetSurrogate s;
  s.rep_count = rs.counts[0];
  s.mean_gp = fit_gp_auto(rs.Xbar, rs.ybar, m, bounds, mix_seed(seed, 0x6d65u));
  s.var_gp = fit_gp_auto(rs.Xbar, rs.s2.array().sqrt(), m, bounds, mix_seed(seed, 0x7661u));
  return s;
}

HetSurrogate fit_surrogate(const ReplicateSet& rs, int m, uint64_t seed) {
  return fit_surrogate(rs, m, default_bounds(rs.Xbar), seed);
}

Eigen::VectorXd v95(const HetSurrogate& s, const DesignMatrix& Xnew) {
  PredictiveMoments pv = s.var_gp.predict(Xnew, Scale::CI);
  Eigen::VectorXd out(Xnew.n());
  for (int j = 0; j < Xnew.n(); ++j) {
    const double q = std::max(0.0, pv.mean[j] + s.q95_mult * std::sqrt(std::max(0.0, pv.var[j])));
    out[j] = q * q;
  }
  return out;
}

PredictiveMoments predict_surrogate(const HetSurrogate& s, const DesignMatrix& Xnew, SkMode mode) {
  PredictiveMoments pm = s.mean_gp.predict(Xnew, Scale::CI);
  Eigen::VectorXd vq = v95(s, Xnew);
  PredictiveMoments out;
  out.mean = pm.mean;
  out.var.resize(Xnew.n());
  const double inv_n = 1.0 / static_cast<double>(s.rep_count);
  for (int j = 0; j < Xnew.n(); ++j)
    out.var[j] = (mode == SkMode::SK_CI ? vq[j] * inv_n : vq[j]) + pm.var[j];
  out.scale = mode == SkMode::SK_CI ? Scale::CI : Scale::PI;
  return out;
}

PredictiveMoments sk_reference(const ReplicateSet& rs, const Hyperparams& hp,
                               const GpModel& var_gp, const DesignMatrix& Xnew, Scale scale) {
  const int n = rs.n();
  if (n > 2000) throw ContractError("sk_reference: oracle limited to n <= 2000");
  hp.validate(rs.Xbar.active_dims());
  rs.Xbar.check_roles_match(Xnew, "sk_reference");

  // Smoothed variances at the training inputs, back-transformed from the
  // variance GP's predictive mean; dividing by n_i gives squared standard errors.
  PredictiveMoments pv = var_gp.predict(rs.Xbar, Scale::CI);
  Eigen::VectorXd sn(n);
  for (int i = 0; i < n; ++i) {
    const double t = std::max(0.0, pv.mean[i]);
    sn[i] = t * t / static_cast<double>(rs.counts[i]);
  }

  Eigen::MatrixXd c = hp.tau2 * corr_matrix(rs.Xbar.active_block(), hp.gamma, 0.0, false);
  c.diagonal() += sn;
  CholFactor f = jittered_cholesky(c, hp.tau2);

  const double y_mean = rs.ybar.mean();
  Eigen::VectorXd yc = rs.ybar.array() - y_mean;
  Eigen::VectorXd alpha = chol_solve(f.lower, yc);

  Eigen::MatrixXd kx =
      hp.tau2 * corr_cross(rs.Xbar.active_block(), Xnew.active_block(), hp.gamma);

  PredictiveMoments out;
  out.scale = scale;
  out.mean = (kx.transpose() * alpha).array() + y_mean;
  Eigen::MatrixXd w = f.lower.triangularView<Eigen::Lower>().solve(kx);
  out.var.resize(Xnew.n());

  Eigen::VectorXd lam_new;
  if (scale == Scale::PI) {
    PredictiveMoments pvn = var_gp.predict(Xnew, Scale::CI);
    lam_new.resize(Xnew.n());
    for (int j = 0; j < Xnew.n(); ++j) {
      const double t = std::max(0.0, pvn.mean[j]);
      lam_new[j] = t * t;
    }
  }
  for (int j = 0; j < Xnew.n(); ++j) {
    double v = hp.tau2 - w.col(j).squaredNorm();
    if (scale == Scale::PI) v += lam_new[j];
    out.var[j] = std::max(0.0, v);
  }
  return out;
}

}  // namespace lakegp
