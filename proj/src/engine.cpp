#include "lakegp/engine.hpp"

#include "lakegp/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace lakegp {

namespace {

constexpr CivilDay kMinDay = std::numeric_limits<CivilDay>::min() / 2;

void append_replicates(ReplicateSet& rs, const ReplicateSet& tail) {
  if (rs.n() == 0) {
    rs = tail;
    return;
  }
  const int n0 = rs.n();
  const int n1 = tail.n();
  rs.Xbar.values.conservativeResize(n0 + n1, Eigen::NoChange);
  rs.Xbar.values.bottomRows(n1) = tail.Xbar.values;
  rs.ybar.conservativeResize(n0 + n1);
  rs.ybar.tail(n1) = tail.ybar;
  rs.s2.conservativeResize(n0 + n1);
  rs.s2.tail(n1) = tail.s2;
  rs.counts.conservativeResize(n0 + n1);
  rs.counts.tail(n1) = tail.counts;
}

}  // namespace

// ---------------------------------------------------------------------------
// InMemoryStore

InMemoryStore::InMemoryStore(RawEnsemble ensemble, FieldSeries field)
    : ensemble_(std::move(ensemble)), field_(std::move(field)) {
  ref_days_.assign(ensemble_.ref_day.begin(), ensemble_.ref_day.end());
  std::sort(ref_days_.begin(), ref_days_.end());
  ref_days_.erase(std::unique(ref_days_.begin(), ref_days_.end()), ref_days_.end());
  field_.rebuild_index();
}

bool InMemoryStore::has_ensemble(CivilDay ref) const {
  return std::binary_search(ref_days_.begin(), ref_days_.end(), ref);
}

RawEnsemble InMemoryStore::ensemble_between(CivilDay first, CivilDay last) const {
  RawEnsemble out;
  for (int64_t i = 0; i < ensemble_.size(); ++i) {
    const CivilDay r = ensemble_.ref_day[i];
    if (r >= first && r <= last)
      out.push(r, ensemble_.horizon[i], ensemble_.depth[i], ensemble_.member[i],
               ensemble_.temp[i]);
  }
  return out;
}

FieldSeries InMemoryStore::field_between(CivilDay first, CivilDay last) const {
  FieldSeries out;
  for (int64_t i = 0; i < field_.size(); ++i) {
    const CivilDay d = field_.day[i];
    if (d >= first && d <= last) out.push(d, field_.depth[i], field_.temp[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// phi

double compute_phi(const FieldSeries& field, CivilDay ref) {
  double sum = 0.0;
  for (int i = 0; i < 5; ++i) {
    const CivilDay day = ref - i;
    double v[2];
    for (int dep = 0; dep < 2; ++dep) {
      bool found = false;
      for (int back = 0; back <= 3 && !found; ++back) {
        if (auto obs = field.lookup(day - back, dep)) {
          v[dep] = *obs;
          found = true;
        }
      }
      if (!found)
        throw DataError("phi: no observation at depth " + std::to_string(dep) +
                        " within 3 days of " + format_date(day));
    }
    sum += 0.5 * (v[0] + v[1]);
  }
  return sum / 5.0;
}

double compute_phi(const FieldSeries& field, int t_doy, int lambda, int base_year) {
  return compute_phi(field, civil_of_doy(base_year + lambda, t_doy));
}

// ---------------------------------------------------------------------------
// Engine

const HetSurrogate& Engine::surrogate(bool with_phi) const { return pipeline(with_phi).surrogate; }
const BiasModel& Engine::bias(bool with_phi) const { return pipeline(with_phi).bias; }
const DiscrepancyData& Engine::discrepancies(bool with_phi) const {
  return pipeline(with_phi).disc;
}
const DesignMatrix& Engine::design(bool with_phi) const { return pipeline(with_phi).xbar; }

const Engine::ModePipeline& Engine::pipeline(bool with_phi) const {
  if (with_phi && !cfg_.with_phi)
    throw ContractError("engine: phi pipeline disabled by configuration");
  return with_phi ? phi_mode_ : nophi_mode_;
}

void Engine::derive_grid() {
  h_max_ = 0;
  std::vector<char> seen(256, 0);
  for (int i = 0; i < rs_.n(); ++i) {
    h_max_ = std::max(h_max_, static_cast<int>(rs_.Xbar.values(i, 2)));
    seen[static_cast<int>(rs_.Xbar.values(i, 1)) & 0xff] = 1;
  }
  depths_.clear();
  for (int d = 0; d < 256; ++d)
    if (seen[d]) depths_.push_back(d);
}

void Engine::rebuild_mode_designs() {
  const int n = rs_.n();
  nophi_mode_.xbar = rs_.Xbar;
  if (!cfg_.with_phi) return;

  DesignMatrix with;
  with.roles = {Col::Day, Col::Depth, Col::Horizon, Col::Phi, Col::Year};
  with.active = {0, 1, 2, 3};
  with.values.resize(n, 5);
  with.values.col(0) = rs_.Xbar.values.col(0);
  with.values.col(1) = rs_.Xbar.values.col(1);
  with.values.col(2) = rs_.Xbar.values.col(2);
  with.values.col(4) = rs_.Xbar.values.col(3);
  // phi per (year, day); rows for one reference date share the value.
  double cached_phi = 0.0;
  int64_t cached_key = -1;
  for (int i = 0; i < n; ++i) {
    const int t = static_cast<int>(rs_.Xbar.values(i, 0));
    const int lambda = static_cast<int>(rs_.Xbar.values(i, 3));
    const int64_t key = (static_cast<int64_t>(lambda) << 16) | t;
    if (key != cached_key) {
      cached_phi = compute_phi(field_, t, lambda, base_year_);
      cached_key = key;
    }
    with.values(i, 3) = cached_phi;
  }
  phi_mode_.xbar = std::move(with);
}

static ReplicateSet mode_replicates(const DesignMatrix& xbar, const ReplicateSet& rs) {
  ReplicateSet out;
  out.Xbar = xbar;
  out.ybar = rs.ybar;
  out.s2 = rs.s2;
  out.counts = rs.counts;
  return out;
}

void Engine::extend_musk_cache(ModePipeline& mode, int old_n) {
  const int n = mode.xbar.n();
  if (old_n >= n) return;
  std::vector<int> tail(n - old_n);
  for (int i = old_n; i < n; ++i) tail[i - old_n] = i;
  DesignMatrix tail_design = mode.xbar.rows(tail);
  Eigen::VectorXd mu = predict_surrogate(mode.surrogate, tail_design, SkMode::SK_CI).mean;
  mode.mu_sk.conservativeResize(n);
  mode.mu_sk.tail(n - old_n) = mu;
}

void Engine::rebuild_discrepancies_and_bias_data(uint64_t salt) {
  for (ModePipeline* mode : {&phi_mode_, &nophi_mode_}) {
    if (mode == &phi_mode_ && !cfg_.with_phi) continue;
    ReplicateSet rsv = mode_replicates(mode->xbar, rs_);
    mode->disc = build_discrepancies(mode->surrogate, rsv, field_, base_year_, &mode->mu_sk);
    if (salt != 0)
      gp_set_data(mode->bias.gp, mode->disc.X, mode->disc.y, mix_seed(cfg_.seed, salt));
  }
}

ReplicateSet build_ogp_replicates(const FieldSeries& field, CivilDay train_last) {
  // Same-day-of-year observations across years act as replicates; groups whose
  // count differs from the modal count (leap days, partial years) are dropped
  // so replication stays uniform.
  std::map<std::pair<int, int>, std::vector<double>> groups;
  for (int64_t i = 0; i < field.size(); ++i) {
    if (field.day[i] > train_last) continue;
    groups[{day_of_year(field.day[i]), field.depth[i]}].push_back(field.temp[i]);
  }
  std::map<size_t, int> count_freq;
  for (const auto& [key, v] : groups)
    if (v.size() >= 2) ++count_freq[v.size()];
  if (count_freq.empty())
    throw DataError("OGP: need at least two years of field data for same-day replicates");
  size_t modal = 0;
  int best = -1;
  for (const auto& [c, f] : count_freq)
    if (f > best) {
      best = f;
      modal = c;
    }

  int n = 0;
  for (const auto& [key, v] : groups)
    if (v.size() == modal) ++n;

  ReplicateSet rs;
  rs.Xbar.roles = {Col::Day, Col::Depth};
  rs.Xbar.active = {0, 1};
  rs.Xbar.values.resize(n, 2);
  rs.ybar.resize(n);
  rs.s2.resize(n);
  rs.counts.resize(n);
  int i = 0;
  for (const auto& [key, v] : groups) {
    if (v.size() != modal) continue;
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    rs.Xbar.values(i, 0) = key.first;
    rs.Xbar.values(i, 1) = key.second;
    rs.ybar[i] = mean;
    rs.s2[i] = ss / static_cast<double>(v.size() - 1);
    rs.counts[i] = static_cast<int>(modal);
    ++i;
  }
  return rs;
}

void Engine::fit_ogp() {
  ogp_rs_ = build_ogp_replicates(field_, train_last_);
  ogp_ = fit_surrogate(ogp_rs_, cfg_.vecchia_m, mix_seed(cfg_.seed, 0x6f6770u));
}

void Engine::initial_train(const CampaignStore& store, CivilDay train_first,
                           CivilDay train_last) {
  if (train_first > train_last) throw ContractError("initial_train: empty training window");
  base_year_ = year_of(train_first);
  train_first_ = train_first;
  train_last_ = train_last;
  field_ = store.field_between(kMinDay, train_last);
  field_.rebuild_index();
  corpus_ = store.ensemble_between(train_first, train_last);
  if (corpus_.size() == 0) throw DataError("initial_train: no ensemble data in window");
  corpus_ranges_.clear();
  for (int64_t i = 0; i < corpus_.size(); ++i) {
    const CivilDay r = corpus_.ref_day[i];
    if (corpus_ranges_.empty() || corpus_ranges_.back().first != r)
      corpus_ranges_.push_back({r, {i, i + 1}});
    else
      corpus_ranges_.back().second.second = i + 1;
  }

  rs_ = collapse(corpus_, base_year_);
  derive_grid();
  rebuild_mode_designs();

  int tag = 0;
  for (ModePipeline* mode : {&phi_mode_, &nophi_mode_}) {
    ++tag;
    if (mode == &phi_mode_ && !cfg_.with_phi) continue;
    ReplicateSet rsv = mode_replicates(mode->xbar, rs_);
    mode->surrogate =
        fit_surrogate(rsv, cfg_.vecchia_m, mix_seed(cfg_.seed, 0x737572u, tag));
    mode->mu_sk = predict_surrogate(mode->surrogate, mode->xbar, SkMode::SK_CI).mean;
  }
  rebuild_discrepancies_and_bias_data(0);
  tag = 0;
  for (ModePipeline* mode : {&phi_mode_, &nophi_mode_}) {
    ++tag;
    if (mode == &phi_mode_ && !cfg_.with_phi) continue;
    mode->bias = fit_bias(mode->disc, cfg_.vecchia_m, mix_seed(cfg_.seed, 0x626373u, tag));
  }
  fit_ogp();

  current_ = train_last;
  steps_since_refit_ = 0;
  refit_count_ = 0;
  trained_ = true;
}

void Engine::refit_models() {
  ++refit_count_;
  int tag = 0;
  for (ModePipeline* mode : {&phi_mode_, &nophi_mode_}) {
    ++tag;
    if (mode == &phi_mode_ && !cfg_.with_phi) continue;
    ReplicateSet rsv = mode_replicates(mode->xbar, rs_);
    FitBounds b = default_bounds(mode->xbar);
    gp_reoptimize(mode->surrogate.mean_gp, cfg_.vecchia_m, b,
                  mix_seed(cfg_.seed, 0x726d65u, refit_count_, tag), 60);
    gp_reoptimize(mode->surrogate.var_gp, cfg_.vecchia_m, b,
                  mix_seed(cfg_.seed, 0x727661u, refit_count_, tag), 60);
    mode->mu_sk = predict_surrogate(mode->surrogate, mode->xbar, SkMode::SK_CI).mean;
  }
  rebuild_discrepancies_and_bias_data(0x72626du);
  tag = 0;
  for (ModePipeline* mode : {&phi_mode_, &nophi_mode_}) {
    ++tag;
    if (mode == &phi_mode_ && !cfg_.with_phi) continue;
    gp_reoptimize(mode->bias.gp, cfg_.vecchia_m, default_bounds(mode->disc.X),
                  mix_seed(cfg_.seed, 0x726269u, refit_count_, tag), 60);
  }
  steps_since_refit_ = 0;
}

std::vector<ForecastRecord> Engine::daily_step(const CampaignStore& store) {
  if (!trained_) throw ContractError("daily_step: initial_train has not run");
  const CivilDay r = current_ + 1;
  if (!store.has_ensemble(r))
    throw DataError("daily_step: no ensemble data for reference date " + format_date(r) +
                    " (state unchanged)");

  FieldSeries delta = store.field_between(current_ + 1, r);
  for (int64_t i = 0; i < delta.size(); ++i)
    field_.push(delta.day[i], delta.depth[i], delta.temp[i]);

  RawEnsemble batch = store.ensemble_between(r, r);
  const int64_t row0 = corpus_.size();
  corpus_.append(batch);
  corpus_ranges_.push_back({r, {row0, corpus_.size()}});

  const int old_n = rs_.n();
  append_replicates(rs_, collapse(batch, base_year_));
  rebuild_mode_designs();

  for (ModePipeline* mode : {&phi_mode_, &nophi_mode_}) {
    if (mode == &phi_mode_ && !cfg_.with_phi) continue;
    gp_set_data(mode->surrogate.mean_gp, mode->xbar, rs_.ybar, mix_seed(cfg_.seed, 0x7364u));
    gp_set_data(mode->surrogate.var_gp, mode->xbar, rs_.s2.array().sqrt(),
                mix_seed(cfg_.seed, 0x7376u));
  }

  ++steps_since_refit_;
  if (cfg_.refit_cadence > 0 && steps_since_refit_ >= cfg_.refit_cadence) {
    refit_models();
  } else {
    for (ModePipeline* mode : {&phi_mode_, &nophi_mode_}) {
      if (mode == &phi_mode_ && !cfg_.with_phi) continue;
      extend_musk_cache(*mode, old_n);
    }
    rebuild_discrepancies_and_bias_data(0x726264u);
  }

  current_ = r;
  return emit_for(r, false);
}

DesignMatrix Engine::query_design(CivilDay ref, bool with_phi) const {
  const int t = day_of_year(ref);
  const int lambda = year_of(ref) - base_year_;
  const int n_d = static_cast<int>(depths_.size());
  const int rows = h_max_ * n_d;
  DesignMatrix q;
  if (with_phi) {
    q.roles = {Col::Day, Col::Depth, Col::Horizon, Col::Phi, Col::Year};
    q.active = {0, 1, 2, 3};
    q.values.resize(rows, 5);
  } else {
    q.roles = {Col::Day, Col::Depth, Col::Horizon, Col::Year};
    q.active = {0, 1, 2};
    q.values.resize(rows, 4);
  }
  const double phi = with_phi ? compute_phi(field_, ref) : 0.0;
  int i = 0;
  for (int h = 1; h <= h_max_; ++h) {
    for (int d : depths_) {
      q.values(i, 0) = t;
      q.values(i, 1) = d;
      q.values(i, 2) = h;
      if (with_phi) {
        q.values(i, 3) = phi;
        q.values(i, 4) = lambda;
      } else {
        q.values(i, 3) = lambda;
      }
      ++i;
    }
  }
  return q;
}

std::vector<ForecastRecord> Engine::emit_for(CivilDay ref, bool attach_truth) const {
  const int n_d = static_cast<int>(depths_.size());
  const int rows = h_max_ * n_d;

  DesignMatrix q_nophi = query_design(ref, false);
  DesignMatrix q_phi;
  if (cfg_.with_phi) q_phi = query_design(ref, true);

  // Climatological queries index the target date's day-of-year.
  DesignMatrix q_ogp;
  q_ogp.roles = {Col::Day, Col::Depth};
  q_ogp.active = {0, 1};
  q_ogp.values.resize(rows, 2);
  {
    int i = 0;
    for (int h = 1; h <= h_max_; ++h)
      for (int d : depths_) {
        q_ogp.values(i, 0) = day_of_year(ref + h);
        q_ogp.values(i, 1) = d;
        ++i;
      }
  }

  // Raw ensemble moments for this reference date.
  std::vector<double> raw_mean(rows, 0.0), raw_sd(rows, 0.0);
  {
    const auto it = std::find_if(corpus_ranges_.begin(), corpus_ranges_.end(),
                                 [&](const auto& p) { return p.first == ref; });
    if (it == corpus_ranges_.end())
      throw DataError("emit: no ensemble rows for " + format_date(ref));
    std::vector<int> d_index(256, -1);
    for (int di = 0; di < n_d; ++di) d_index[depths_[di]] = di;
    std::vector<std::vector<double>> cells(rows);
    for (int64_t i = it->second.first; i < it->second.second; ++i) {
      const int h = corpus_.horizon[i];
      const int di = d_index[corpus_.depth[i]];
      cells[(h - 1) * n_d + di].push_back(corpus_.temp[i]);
    }
    for (int c = 0; c < rows; ++c) {
      if (cells[c].empty()) throw DataError("emit: missing ensemble cell for " + format_date(ref));
      double mean = 0.0;
      for (double v : cells[c]) mean += v;
      mean /= static_cast<double>(cells[c].size());
      double ss = 0.0;
      for (double v : cells[c]) ss += (v - mean) * (v - mean);
      raw_mean[c] = mean;
      raw_sd[c] = cells[c].size() > 1
                      ? std::sqrt(ss / static_cast<double>(cells[c].size() - 1))
                      : 0.0;
    }
  }

  struct Emission {
    ModelTag tag;
    Eigen::VectorXd mean, var;
  };
  std::vector<Emission> emissions;
  if (cfg_.with_phi) {
    PredictiveMoments gpbc = predict_gpbc(phi_mode_.surrogate, phi_mode_.bias, q_phi);
    emissions.push_back({ModelTag::GPBC, gpbc.mean, gpbc.var});
  }
  {
    PredictiveMoments nophi = predict_gpbc(nophi_mode_.surrogate, nophi_mode_.bias, q_nophi);
    emissions.push_back({ModelTag::GPBC_NOPHI, nophi.mean, nophi.var});
  }
  {
    const ModePipeline& src = cfg_.with_phi ? phi_mode_ : nophi_mode_;
    const DesignMatrix& q = cfg_.with_phi ? q_phi : q_nophi;
    PredictiveMoments glm = predict_surrogate(src.surrogate, q, SkMode::SK_PI);
    emissions.push_back({ModelTag::GPGLM, glm.mean, glm.var});
  }
  {
    PredictiveMoments ogp = predict_surrogate(ogp_, q_ogp, SkMode::SK_PI);
    emissions.push_back({ModelTag::OGP, ogp.mean, ogp.var});
  }

  std::vector<ForecastRecord> out;
  out.reserve((emissions.size() + 1) * rows);
  auto push_record = [&](ModelTag tag, int i, double mean, double sd) {
    ForecastRecord rec;
    rec.model = tag;
    rec.ref_day = ref;
    rec.horizon = i / n_d + 1;
    rec.depth = depths_[i % n_d];
    rec.mean = mean;
    rec.sd = sd;
    rec.lo90 = mean - kQ95 * sd;
    rec.hi90 = mean + kQ95 * sd;
    if (attach_truth) {
      if (auto obs = field_.lookup(ref + rec.horizon, rec.depth)) {
        rec.has_truth = true;
        rec.truth = *obs;
      }
    }
    out.push_back(rec);
  };
  for (const Emission& e : emissions)
    for (int i = 0; i < rows; ++i)
      push_record(e.tag, i, e.mean[i], std::sqrt(std::max(0.0, e.var[i])));
  for (int i = 0; i < rows; ++i) push_record(ModelTag::GLM_RAW, i, raw_mean[i], raw_sd[i]);
  return out;
}

std::vector<ForecastRecord> Engine::hindcast(CivilDay first, CivilDay last) const {
  if (!trained_) throw ContractError("hindcast: initial_train has not run");
  if (first > last || first < train_first_ || last > current_)
    throw ContractError("hindcast: range " + format_date(first) + ".." + format_date(last) +
                        " outside the trained window");
  std::vector<ForecastRecord> out;
  for (const auto& [ref, range] : corpus_ranges_) {
    if (ref < first || ref > last) continue;
    std::vector<ForecastRecord> recs = emit_for(ref, true);
    out.insert(out.end(), recs.begin(), recs.end());
  }
  return out;
}

}  // namespace lakegp
