#include "lakegp/vecchia.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "lakegp/linalg.hpp"
#include "lakegp/optim.hpp"
#include "lakegp/rng.hpp"

namespace lakegp {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

inline double sqdist(const Eigen::MatrixXd& a, int i, int j) {
  return (a.row(i) - a.row(j)).squaredNorm();
}

// Cholesky of a small conditioning matrix with the module jitter policy.
void small_jittered_llt(Eigen::MatrixXd& c, Eigen::LLT<Eigen::MatrixXd>& llt) {
  llt.compute(c);
  if (llt.info() == Eigen::Success) return;
  double jitter = 1e-8;
  for (int attempt = 0; attempt < 3; ++attempt) {
    Eigen::MatrixXd work = c;
    work.diagonal().array() += jitter;
    llt.compute(work);
    if (llt.info() == Eigen::Success) return;
    jitter *= 10.0;
  }
  throw NumericError("vecchia: neighbor covariance not positive definite after jitter policy");
}

// Conditional moments of every ordered observation given its neighbor set, on
// the correlation scale: y_i | y_N ~ N(mu_i, tau2 * vtilde_i).
void conditional_terms(const Eigen::MatrixXd& a, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& gamma, double g, const VecchiaPlan& plan,
                       Eigen::VectorXd& mu, Eigen::VectorXd& vtilde) {
  const int n = plan.n();
  mu.resize(n);
  vtilde.resize(n);
  const Eigen::VectorXd inv_gamma = gamma.cwiseInverse();
  const int k = static_cast<int>(a.cols());

  auto corr = [&](int i, int j) {
    double q2 = 0.0;
    for (int l = 0; l < k; ++l) {
      const double d = a(i, l) - a(j, l);
      q2 += d * d * inv_gamma[l];
    }
    return matern35(std::sqrt(q2));
  };

#pragma omp parallel for schedule(dynamic, 64)
  for (int i = 0; i < n; ++i) {
    const int row = plan.order[i];
    const int b0 = plan.nbr_offsets[i];
    const int nb = plan.nbr_offsets[i + 1] - b0;
    if (nb == 0) {
      mu[i] = 0.0;
      vtilde[i] = 1.0 + g;
      continue;
    }
    Eigen::MatrixXd c(nb, nb);
    Eigen::VectorXd kv(nb), yn(nb);
    for (int p = 0; p < nb; ++p) {
      const int rp = plan.neighbors[b0 + p];
      yn[p] = y[rp];
      kv[p] = corr(row, rp);
      c(p, p) = 1.0 + g;
      for (int q = 0; q < p; ++q) {
        const double v = corr(rp, plan.neighbors[b0 + q]);
        c(p, q) = v;
        c(q, p) = v;
      }
    }
    Eigen::LLT<Eigen::MatrixXd> llt;
    small_jittered_llt(c, llt);
    Eigen::VectorXd sol = llt.solve(kv);
    mu[i] = sol.dot(yn);
    vtilde[i] = std::max(1e-12, (1.0 + g) - sol.dot(kv));
  }
}

}  // namespace

std::vector<int> maximin_select(const Eigen::MatrixXd& scaled, int count, uint64_t seed) {
  const int n = static_cast<int>(scaled.rows());
  count = std::min(count, n);
  std::vector<int> order;
  order.reserve(count);
  std::vector<double> dmin(n, std::numeric_limits<double>::infinity());

  SplitMix64 rng(mix_seed(seed, 0x6d78u));
  int last = static_cast<int>(rng.below(static_cast<uint64_t>(n)));
  order.push_back(last);

  // Fixed chunking (independent of the thread count) keeps the argmax reduction
  // deterministic; the (value, lowest-index) merge is order-insensitive anyway.
  const int n_chunks = 64;
  const int chunk = (n + n_chunks - 1) / n_chunks;
  std::vector<double> best_v(n_chunks);
  std::vector<int> best_i(n_chunks);

  for (int step = 1; step < count; ++step) {
#pragma omp parallel for schedule(static)
    for (int cidx = 0; cidx < n_chunks; ++cidx) {
      const int j0 = cidx * chunk;
      const int j1 = std::min(n, j0 + chunk);
      double bv = -1.0;
      int bi = -1;
      for (int j = j0; j < j1; ++j) {
        const double d = sqdist(scaled, j, last);
        if (d < dmin[j]) dmin[j] = d;
        if (dmin[j] > bv) {
          bv = dmin[j];
          bi = j;
        }
      }
      best_v[cidx] = bv;
      best_i[cidx] = bi;
    }
    double bv = -1.0;
    int bi = -1;
    for (int cidx = 0; cidx < n_chunks; ++cidx) {
      if (best_i[cidx] >= 0 && (best_v[cidx] > bv || (best_v[cidx] == bv && best_i[cidx] < bi))) {
        bv = best_v[cidx];
        bi = best_i[cidx];
      }
    }
    last = bi;
    dmin[last] = -1.0;  // selected rows never win again
    order.push_back(last);
  }
  return order;
}

VecchiaPlan build_plan(const DesignMatrix& X, const Hyperparams& hp, int m, uint64_t seed) {
  const int n = X.n();
  if (m < 1) throw ContractError("build_plan: m must be >= 1");
  if (n < 2) throw ContractError("build_plan: need at least 2 rows");
  hp.validate(X.active_dims());

  VecchiaPlan plan;
  plan.m = m;
  plan.scaling = hp.gamma.array().sqrt().inverse();
  Eigen::MatrixXd scaled = X.active_block();
  for (int l = 0; l < scaled.cols(); ++l) scaled.col(l) *= plan.scaling[l];

  plan.order = maximin_select(scaled, n, seed);
  std::vector<int> rank(n);
  for (int i = 0; i < n; ++i) rank[plan.order[i]] = i;

  plan.nbr_offsets.resize(n + 1);
  plan.nbr_offsets[0] = 0;
  for (int i = 0; i < n; ++i)
    plan.nbr_offsets[i + 1] = plan.nbr_offsets[i] + std::min(m, i);
  plan.neighbors.resize(plan.nbr_offsets[n]);

  // For each ordered row, the m nearest predecessors by (distance, index).
#pragma omp parallel for schedule(dynamic, 32)
  for (int i = 1; i < n; ++i) {
    const int row = plan.order[i];
    const int want = std::min(m, i);
    using Cand = std::pair<double, int>;
    std::vector<Cand> heap;  // max-heap on (dist, index)
    heap.reserve(want + 1);
    for (int p = 0; p < i; ++p) {
      const int cand = plan.order[p];
      const double d = sqdist(scaled, row, cand);
      if (static_cast<int>(heap.size()) < want) {
        heap.emplace_back(d, cand);
        std::push_heap(heap.begin(), heap.end());
      } else if (Cand(d, cand) < heap.front()) {
        std::pop_heap(heap.begin(), heap.end());
        heap.back() = {d, cand};
        std::push_heap(heap.begin(), heap.end());
      }
    }
    std::sort(heap.begin(), heap.end());
    for (int p = 0; p < want; ++p) plan.neighbors[plan.nbr_offsets[i] + p] = heap[p].second;
  }
  return plan;
}

double vecchia_loglik(const DesignMatrix& X, const Eigen::VectorXd& y, const Hyperparams& hp,
                      const VecchiaPlan& plan) {
  const int n = X.n();
  if (plan.n() != n || y.size() != n)
    throw ContractError("vecchia_loglik: plan/response size mismatch");
  hp.validate(X.active_dims());

  Eigen::VectorXd mu, vtilde;
  conditional_terms(X.active_block(), y, hp.gamma, hp.g, plan, mu, vtilde);

  double ll = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = hp.tau2 * vtilde[i];
    const double r = y[plan.order[i]] - mu[i];
    ll += -0.5 * (kLog2Pi + std::log(v)) - 0.5 * r * r / v;
  }
  return ll;
}

namespace {

// Profiled negative Vecchia log likelihood; tau2hat = mean of resid^2 / vtilde.
double vecchia_profiled_negll(const Eigen::MatrixXd& a, const Eigen::VectorXd& y,
                              const Eigen::VectorXd& gamma, double g, const VecchiaPlan& plan,
                              double* tau2hat) {
  const int n = plan.n();
  Eigen::VectorXd mu, vtilde;
  conditional_terms(a, y, gamma, g, plan, mu, vtilde);
  double sum_log_v = 0.0;
  double sum_q = 0.0;
  for (int i = 0; i < n; ++i) {
    const double r = y[plan.order[i]] - mu[i];
    sum_log_v += std::log(vtilde[i]);
    sum_q += r * r / vtilde[i];
  }
  double t2 = sum_q / n;
  if (!(t2 > 1e-300)) t2 = 1e-300;
  if (tau2hat != nullptr) *tau2hat = t2;
  return 0.5 * sum_log_v + 0.5 * n * (std::log(t2) + 1.0 + kLog2Pi);
}

Eigen::VectorXd log_bounds_vector(const FitBounds& bounds) {
  const int k = static_cast<int>(bounds.gamma_lo.size());
  Eigen::VectorXd lo(k + 1);
  for (int l = 0; l < k; ++l) lo[l] = std::log(bounds.gamma_lo[l]);
  lo[k] = std::log(bounds.g_lo);
  return lo;
}

}  // namespace

VecchiaGP fit_vecchia(const DesignMatrix& X, const Eigen::VectorXd& y, int m,
                      const FitBounds& bounds, uint64_t seed, const FitControl& control) {
  const int n = X.n();
  const int k = X.active_dims();
  if (n < 3) throw ContractError("fit_vecchia: need at least 3 observations");
  if (y.size() != n) throw ContractError("fit_vecchia: response length mismatch");

  const double y_mean = y.mean();
  const Eigen::VectorXd yc = y.array() - y_mean;
  const Eigen::MatrixXd a = X.active_block();

  // Stage 1: preliminary lengthscales from an exact fit on a maximin subsample,
  // selected under per-column range scaling.
  const int sub_n = std::min(n, 2000);
  Eigen::MatrixXd range_scaled = a;
  for (int l = 0; l < k; ++l) {
    double range = a.col(l).maxCoeff() - a.col(l).minCoeff();
    if (!(range > 0.0)) range = 1.0;
    range_scaled.col(l) /= range;
  }
  std::vector<int> sub_idx = maximin_select(range_scaled, sub_n, mix_seed(seed, 0x5351u));
  std::sort(sub_idx.begin(), sub_idx.end());
  DesignMatrix Xsub = X.rows(sub_idx);
  Eigen::VectorXd ysub(sub_n);
  for (int i = 0; i < sub_n; ++i) ysub[i] = y[sub_idx[i]];

  FitControl prelim;
  prelim.n_starts = 2;
  prelim.max_evals = 120;
  prelim.xtol_abs = 2e-2;
  prelim.ftol_rel = 1e-6;
  DenseGP gp0 = fit_mle(Xsub, ysub, bounds, mix_seed(seed, 0x7031u), prelim);

  // Stage 2: plan under preliminary scaling, then re-optimize everything under
  // the Vecchia likelihood with tau2 profiled.
  VecchiaPlan plan = build_plan(X, gp0.hp, m, mix_seed(seed, 0x706cu));

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
    return vecchia_profiled_negll(a, yc, gamma, std::exp(z[k]), plan, nullptr);
  };

  Eigen::VectorXd z0(k + 1);
  for (int l = 0; l < k; ++l) z0[l] = std::log(gp0.hp.gamma[l]);
  z0[k] = std::log(std::max(gp0.hp.g, bounds.g_lo));

  NmOptions nm;
  nm.max_evals = control.max_evals;
  nm.ftol_rel = control.ftol_rel;
  nm.xtol_abs = control.xtol_abs;
  MultiStartResult best =
      multistart_minimize(objective, lo, hi, {z0}, 1, mix_seed(seed, 0x7632u), nm);
  if (!(best.fval < 1e29)) throw FitError("fit_vecchia: optimization failed at every start");

  VecchiaGP gp;
  gp.hp.gamma.resize(k);
  for (int l = 0; l < k; ++l) gp.hp.gamma[l] = std::exp(best.x[l]);
  gp.hp.g = std::exp(best.x[k]);
  double tau2 = 1.0;
  vecchia_profiled_negll(a, yc, gp.hp.gamma, gp.hp.g, plan, &tau2);
  gp.hp.tau2 = std::max(tau2, 1e-12);
  gp.X = X;
  gp.y = yc;
  gp.y_mean = y_mean;
  gp.plan = build_plan(X, gp.hp, m, mix_seed(seed, 0x706cu));
  return gp;
}

VecchiaGP fit_vecchia(const DesignMatrix& X, const Eigen::VectorXd& y, int m,
                      const FitBounds& bounds, uint64_t seed) {
  FitControl c;
  c.n_starts = 1;  // plus the preliminary estimate as a warm start
  c.max_evals = 150;
  c.xtol_abs = 1e-3;
  return fit_vecchia(X, y, m, bounds, seed, c);
}

void vecchia_set_data(VecchiaGP& gp, const DesignMatrix& X, const Eigen::VectorXd& y,
                      uint64_t seed, bool rebuild_plan) {
  gp.X = X;
  gp.y_mean = y.mean();
  gp.y = y.array() - gp.y_mean;
  if (rebuild_plan) gp.plan = build_plan(X, gp.hp, gp.plan.m, mix_seed(seed, 0x706cu));
}

void vecchia_reoptimize(VecchiaGP& gp, const FitBounds& bounds, uint64_t seed, int max_evals) {
  const int k = gp.X.active_dims();
  const Eigen::MatrixXd a = gp.X.active_block();
  gp.plan = build_plan(gp.X, gp.hp, gp.plan.m, mix_seed(seed, 0x706cu));

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
    return vecchia_profiled_negll(a, gp.y, gamma, std::exp(z[k]), gp.plan, nullptr);
  };

  Eigen::VectorXd z0(k + 1);
  for (int l = 0; l < k; ++l) z0[l] = std::log(gp.hp.gamma[l]);
  z0[k] = std::log(std::max(gp.hp.g, bounds.g_lo));

  NmOptions nm;
  nm.max_evals = max_evals;
  nm.xtol_abs = 2e-3;
  nm.ftol_rel = 1e-8;
  NmResult r = nelder_mead(objective, z0.cwiseMax(lo).cwiseMin(hi), lo, hi, nm);
  if (!(r.fval < 1e29)) throw FitError("vecchia_reoptimize: optimization failed");

  for (int l = 0; l < k; ++l) gp.hp.gamma[l] = std::exp(r.x[l]);
  gp.hp.g = std::exp(r.x[k]);
  double tau2 = 1.0;
  vecchia_profiled_negll(a, gp.y, gp.hp.gamma, gp.hp.g, gp.plan, &tau2);
  gp.hp.tau2 = std::max(tau2, 1e-12);
  gp.plan = build_plan(gp.X, gp.hp, gp.plan.m, mix_seed(seed, 0x706cu));
}

PredictiveMoments predict_vecchia(const VecchiaGP& gp, const DesignMatrix& Xnew, Scale scale) {
  gp.X.check_roles_match(Xnew, "predict_vecchia");
  const int n = gp.X.n();
  const int np = Xnew.n();
  const int k = gp.X.active_dims();
  const int want = std::min(gp.plan.m, n);

  Eigen::MatrixXd at = gp.X.active_block();
  Eigen::MatrixXd ap = Xnew.active_block();
  const Eigen::VectorXd scaling = gp.hp.gamma.array().sqrt().inverse();
  for (int l = 0; l < k; ++l) {
    at.col(l) *= scaling[l];
    ap.col(l) *= scaling[l];
  }
  const Eigen::VectorXd inv_gamma = gp.hp.gamma.cwiseInverse();
  const Eigen::MatrixXd araw_t = gp.X.active_block();
  const Eigen::MatrixXd araw_p = Xnew.active_block();

  PredictiveMoments out;
  out.scale = scale;
  out.mean.resize(np);
  out.var.resize(np);
  const double tau2 = gp.hp.tau2;
  const double g = gp.hp.g;

#pragma omp parallel for schedule(dynamic, 16)
  for (int j = 0; j < np; ++j) {
    using Cand = std::pair<double, int>;
    std::vector<Cand> heap;
    heap.reserve(want + 1);
    for (int i = 0; i < n; ++i) {
      const double d = (at.row(i) - ap.row(j)).squaredNorm();
      if (static_cast<int>(heap.size()) < want) {
        heap.emplace_back(d, i);
        std::push_heap(heap.begin(), heap.end());
      } else if (Cand(d, i) < heap.front()) {
        std::pop_heap(heap.begin(), heap.end());
        heap.back() = {d, i};
        std::push_heap(heap.begin(), heap.end());
      }
    }
    std::sort(heap.begin(), heap.end());
    const int nb = static_cast<int>(heap.size());

    auto corr = [&](const Eigen::MatrixXd& xa, int ia, const Eigen::MatrixXd& xb, int ib) {
      double q2 = 0.0;
      for (int l = 0; l < k; ++l) {
        const double d = xa(ia, l) - xb(ib, l);
        q2 += d * d * inv_gamma[l];
      }
      return matern35(std::sqrt(q2));
    };

    Eigen::MatrixXd c(nb, nb);
    Eigen::VectorXd kv(nb), yn(nb);
    for (int p = 0; p < nb; ++p) {
      const int rp = heap[p].second;
      yn[p] = gp.y[rp];
      kv[p] = corr(araw_t, rp, araw_p, j);
      c(p, p) = 1.0 + g;
      for (int q = 0; q < p; ++q) {
        const double v = corr(araw_t, rp, araw_t, heap[q].second);
        c(p, q) = v;
        c(q, p) = v;
      }
    }
    Eigen::LLT<Eigen::MatrixXd> llt;
    small_jittered_llt(c, llt);
    Eigen::VectorXd sol = llt.solve(kv);
    out.mean[j] = gp.y_mean + sol.dot(yn);
    const double ci = tau2 * std::max(0.0, 1.0 - sol.dot(kv));
    out.var[j] = scale == Scale::CI ? ci : ci + tau2 * g;
  }
  return out;
}

}  // namespace lakegp
