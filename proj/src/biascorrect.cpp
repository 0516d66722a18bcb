#include "lakegp/biascorrect.hpp"

#include "lakegp/rng.hpp"

namespace lakegp {

AlignedField align_field(const DesignMatrix& Xbar, const FieldSeries& field, int base_year) {
  const int n = Xbar.n();
  const int c_day = Xbar.col_of(Col::Day);
  const int c_depth = Xbar.col_of(Col::Depth);
  const int c_h = Xbar.col_of(Col::Horizon);
  const int c_year = Xbar.col_of(Col::Year);
  if (c_day < 0 || c_depth < 0 || c_h < 0 || c_year < 0)
    throw ContractError("align_field: design must carry day, depth, horizon and year columns");

  AlignedField out;
  out.value = Eigen::VectorXd::Zero(n);
  out.mask.assign(n, 0);
  for (int i = 0; i < n; ++i) {
    const int t = static_cast<int>(Xbar.values(i, c_day));
    const int lambda = static_cast<int>(Xbar.values(i, c_year));
    const int h = static_cast<int>(Xbar.values(i, c_h));
    const int d = static_cast<int>(Xbar.values(i, c_depth));
    const CivilDay target = civil_of_doy(base_year + lambda, t) + h;
    if (auto obs = field.lookup(target, d)) {
      out.value[i] = *obs;
      out.mask[i] = 1;
    }
  }
  return out;
}

DiscrepancyData build_discrepancies(const HetSurrogate& s, const ReplicateSet& rs,
                                    const FieldSeries& field, int base_year,
                                    const Eigen::VectorXd* mu_sk) {
  AlignedField aligned = align_field(rs.Xbar, field, base_year);
  int n_kept = 0;
  for (char m : aligned.mask) n_kept += m;
  if (n_kept == 0) throw DataError("build_discrepancies: no aligned field observations");

  Eigen::VectorXd mu;
  if (mu_sk != nullptr) {
    if (mu_sk->size() != rs.n())
      throw ContractError("build_discrepancies: cached surrogate means have wrong length");
    mu = *mu_sk;
  } else {
    mu = predict_surrogate(s, rs.Xbar, SkMode::SK_CI).mean;
  }

  std::vector<int> keep;
  keep.reserve(n_kept);
  for (int i = 0; i < rs.n(); ++i)
    if (aligned.mask[i]) keep.push_back(i);

  DiscrepancyData disc;
  disc.X = rs.Xbar.rows(keep);
  disc.y.resize(n_kept);
  for (int j = 0; j < n_kept; ++j) disc.y[j] = aligned.value[keep[j]] - mu[keep[j]];
  return disc;
}

BiasModel fit_bias(const DiscrepancyData& disc, int m, const FitBounds& bounds, uint64_t seed) {
  if (disc.X.n() < 10) throw ContractError("fit_bias: need at least 10 discrepancies");
  BiasModel b;
  b.gp = fit_gp_auto(disc.X, disc.y, m, bounds, mix_seed(seed, 0x6269u));
  return b;
}

BiasModel fit_bias(const DiscrepancyData& disc, int m, uint64_t seed) {
  return fit_bias(disc, m, default_bounds(disc.X), seed);
}

PredictiveMoments predict_gpbc(const HetSurrogate& s, const BiasModel& b,
                               const DesignMatrix& Xnew) {
  PredictiveMoments ps = predict_surrogate(s, Xnew, SkMode::SK_CI);
  PredictiveMoments pb = b.gp.predict(Xnew, Scale::PI);
  PredictiveMoments out;
  out.scale = Scale::PI;
  out.mean = ps.mean + pb.mean;
  out.var = ps.var + pb.var;
  return out;
}

}  // namespace lakegp
