#pragma once

#include <functional>

#include <Eigen/Core>

#include "lakegp/common.hpp"

namespace lakegp {

struct NmOptions {
  int max_evals = 300;
  double ftol_rel = 1e-9;
  double xtol_abs = 1e-5;  // simplex diameter, in the (log) parameter units
  double step0 = 0.7;      // initial simplex edge length
};

struct NmResult {
  Eigen::VectorXd x;
  double fval = 0.0;
  int evals = 0;
};

// Box-constrained Nelder–Mead. Points outside the box are evaluated at their
// clamped image plus a quadratic penalty. Fully deterministic.
NmResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                     const Eigen::VectorXd& x0, const Eigen::VectorXd& lo,
                     const Eigen::VectorXd& hi, const NmOptions& opt);

struct MultiStartResult {
  Eigen::VectorXd x;
  double fval = 0.0;
  int best_start = -1;
  int total_evals = 0;
  std::vector<double> start_fvals;  // best value reached from each start
};

// Minimizes from `extra_starts` plus (n_lhs) Latin-hypercube starts drawn over
// the box. Ties between starts break on the lower start index.
MultiStartResult multistart_minimize(const std::function<double(const Eigen::VectorXd&)>& f,
                                     const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                                     const std::vector<Eigen::VectorXd>& extra_starts, int n_lhs,
                                     uint64_t seed, const NmOptions& opt);

}  // namespace lakegp
