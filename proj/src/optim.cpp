#include "lakegp/optim.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "lakegp/rng.hpp"

namespace lakegp {

namespace {

double eval_boxed(const std::function<double(const Eigen::VectorXd&)>& f,
                  const Eigen::VectorXd& x, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                  int& evals) {
  Eigen::VectorXd c = x.cwiseMax(lo).cwiseMin(hi);
  double penalty = 1e4 * (x - c).squaredNorm();
  ++evals;
  double v;
  try {
    v = f(c);
  } catch (const std::exception&) {
    v = 1e30;
  }
  if (!std::isfinite(v)) v = 1e30;
  return v + penalty;
}

}  // namespace

NmResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                     const Eigen::VectorXd& x0, const Eigen::VectorXd& lo,
                     const Eigen::VectorXd& hi, const NmOptions& opt) {
  const int k = static_cast<int>(x0.size());
  int evals = 0;

  struct Vertex {
    Eigen::VectorXd x;
    double fv;
    int birth;  // insertion counter, breaks f-ties deterministically
  };
  std::vector<Vertex> s;
  s.reserve(k + 1);
  int birth = 0;
  s.push_back({x0, eval_boxed(f, x0, lo, hi, evals), birth++});
  for (int i = 0; i < k; ++i) {
    Eigen::VectorXd xi = x0;
    double step = opt.step0;
    if (xi[i] + step > hi[i] && xi[i] - step >= lo[i]) step = -step;
    xi[i] += step;
    s.push_back({xi, eval_boxed(f, xi, lo, hi, evals), birth++});
  }

  auto order = [&]() {
    std::sort(s.begin(), s.end(), [](const Vertex& a, const Vertex& b) {
      if (a.fv != b.fv) return a.fv < b.fv;
      return a.birth < b.birth;
    });
  };
  order();

  while (evals < opt.max_evals) {
    // Convergence: function spread and simplex diameter.
    const double fspread = s.back().fv - s.front().fv;
    if (fspread <= opt.ftol_rel * (std::abs(s.front().fv) + 1e-12)) break;
    double diam = 0.0;
    for (int i = 1; i <= k; ++i)
      diam = std::max(diam, (s[i].x - s[0].x).lpNorm<Eigen::Infinity>());
    if (diam <= opt.xtol_abs) break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(k);
    for (int i = 0; i < k; ++i) centroid += s[i].x;
    centroid /= k;

    const Vertex& worst = s.back();
    Eigen::VectorXd xr = centroid + (centroid - worst.x);
    double fr = eval_boxed(f, xr, lo, hi, evals);

    if (fr < s.front().fv) {
      Eigen::VectorXd xe = centroid + 2.0 * (centroid - worst.x);
      double fe = eval_boxed(f, xe, lo, hi, evals);
      if (fe < fr)
        s.back() = {xe, fe, birth++};
      else
        s.back() = {xr, fr, birth++};
    } else if (fr < s[k - 1].fv) {
      s.back() = {xr, fr, birth++};
    } else {
      // Contraction toward the better of worst/reflected.
      bool outside = fr < worst.fv;
      Eigen::VectorXd xc =
          centroid + 0.5 * ((outside ? xr : worst.x) - centroid);
      double fc = eval_boxed(f, xc, lo, hi, evals);
      if (fc < std::min(fr, worst.fv)) {
        s.back() = {xc, fc, birth++};
      } else {
        // Shrink toward the best vertex.
        for (int i = 1; i <= k; ++i) {
          s[i].x = s[0].x + 0.5 * (s[i].x - s[0].x);
          s[i].fv = eval_boxed(f, s[i].x, lo, hi, evals);
          s[i].birth = birth++;
        }
      }
    }
    order();
  }

  Eigen::VectorXd xbest = s.front().x.cwiseMax(lo).cwiseMin(hi);
  return {xbest, s.front().fv, evals};
}

MultiStartResult multistart_minimize(const std::function<double(const Eigen::VectorXd&)>& f,
                                     const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                                     const std::vector<Eigen::VectorXd>& extra_starts, int n_lhs,
                                     uint64_t seed, const NmOptions& opt) {
  const int k = static_cast<int>(lo.size());
  std::vector<Eigen::VectorXd> starts = extra_starts;
  if (n_lhs > 0) {
    Eigen::MatrixXd u = latin_hypercube(n_lhs, k, seed);
    for (int i = 0; i < n_lhs; ++i) {
      Eigen::VectorXd x(k);
      for (int j = 0; j < k; ++j) x[j] = lo[j] + u(i, j) * (hi[j] - lo[j]);
      starts.push_back(x);
    }
  }
  if (starts.empty()) throw ContractError("multistart_minimize: no start points");

  MultiStartResult best;
  best.fval = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < starts.size(); ++i) {
    NmResult r = nelder_mead(f, starts[i], lo, hi, opt);
    best.start_fvals.push_back(r.fval);
    best.total_evals += r.evals;
    if (r.fval < best.fval) {  // strict: earliest start wins ties
      best.fval = r.fval;
      best.x = r.x;
      best.best_start = static_cast<int>(i);
    }
  }
  return best;
}

}  // namespace lakegp
