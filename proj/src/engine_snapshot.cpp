#include <charconv>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "lakegp/engine.hpp"

// Plain-text engine snapshot: scalars, per-model hyperparameters, and the
// cached surrogate means that anchor the discrepancy data. Doubles use %.17g so
// the round trip is bit exact; the underlying campaign CSVs are referenced by
// digest, not stored.

namespace lakegp {

namespace {

constexpr CivilDay kMinDay = std::numeric_limits<CivilDay>::min() / 2;

uint64_t fnv1a(const void* data, size_t len, uint64_t h) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

template <typename T>
uint64_t fnv1a_vec(const std::vector<T>& v, uint64_t h) {
  return v.empty() ? h : fnv1a(v.data(), v.size() * sizeof(T), h);
}

uint64_t ensemble_digest(const RawEnsemble& e) {
  uint64_t h = 1469598103934665603ULL;
  h = fnv1a_vec(e.ref_day, h);
  h = fnv1a_vec(e.horizon, h);
  h = fnv1a_vec(e.depth, h);
  h = fnv1a_vec(e.member, h);
  h = fnv1a_vec(e.temp, h);
  return h;
}

uint64_t field_digest(const FieldSeries& f) {
  uint64_t h = 1469598103934665603ULL;
  h = fnv1a_vec(f.day, h);
  h = fnv1a_vec(f.depth, h);
  h = fnv1a_vec(f.temp, h);
  return h;
}

std::string fmt_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_gp(std::ostream& out, const std::string& name, const GpModel& model) {
  const Hyperparams& hp = model.hp();
  out << "gp " << name << ' ' << (model.is_dense() ? "dense" : "vecchia") << ' '
      << fmt_g17(hp.tau2) << ' ' << fmt_g17(hp.g) << ' ' << hp.gamma.size();
  for (int l = 0; l < hp.gamma.size(); ++l) out << ' ' << fmt_g17(hp.gamma[l]);
  out << '\n';
}

void write_cache(std::ostream& out, const std::string& name, const Eigen::VectorXd& v) {
  out << "cache " << name << ' ' << v.size() << '\n';
  for (int i = 0; i < v.size(); ++i) {
    out << fmt_g17(v[i]);
    out << ((i % 8 == 7 || i + 1 == v.size()) ? '\n' : ' ');
  }
}

struct SnapshotData {
  std::map<std::string, std::string> scalars;
  struct GpRec {
    bool dense = false;
    Hyperparams hp;
  };
  std::map<std::string, GpRec> gps;
  std::map<std::string, Eigen::VectorXd> caches;

  const std::string& scalar(const std::string& key) const {
    auto it = scalars.find(key);
    if (it == scalars.end()) throw StateError("snapshot: missing field '" + key + "'");
    return it->second;
  }
  int64_t scalar_int(const std::string& key) const {
    const std::string& s = scalar(key);
    int64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
      throw StateError("snapshot: bad integer for '" + key + "'");
    return v;
  }
  const GpRec& gp(const std::string& name) const {
    auto it = gps.find(name);
    if (it == gps.end()) throw StateError("snapshot: missing model '" + name + "'");
    return it->second;
  }
};

SnapshotData parse_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StateError("snapshot: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != "lakegp-state v1")
    throw StateError("snapshot: bad magic in '" + path + "'");

  SnapshotData snap;
  bool saw_end = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line == "end") {
      saw_end = true;
      break;
    }
    std::istringstream ls(line);
    std::string head;
    ls >> head;
    if (head == "gp") {
      std::string name, kind;
      int k = 0;
      SnapshotData::GpRec rec;
      ls >> name >> kind >> rec.hp.tau2 >> rec.hp.g >> k;
      if (!ls || (kind != "dense" && kind != "vecchia") || k < 0 || k > 64)
        throw StateError("snapshot: malformed gp record");
      rec.dense = kind == "dense";
      rec.hp.gamma.resize(k);
      for (int l = 0; l < k; ++l) ls >> rec.hp.gamma[l];
      if (!ls) throw StateError("snapshot: malformed gp record");
      snap.gps[name] = rec;
    } else if (head == "cache") {
      std::string name;
      int64_t n = 0;
      ls >> name >> n;
      if (!ls || n < 0) throw StateError("snapshot: malformed cache header");
      Eigen::VectorXd v(n);
      int64_t i = 0;
      while (i < n && std::getline(in, line)) {
        std::istringstream vs(line);
        double x;
        while (i < n && vs >> x) v[i++] = x;
      }
      if (i != n) throw StateError("snapshot: truncated cache '" + name + "'");
      snap.caches[name] = std::move(v);
    } else {
      const size_t eq = line.find('=');
      if (eq == std::string::npos) throw StateError("snapshot: malformed line '" + line + "'");
      snap.scalars[line.substr(0, eq)] = line.substr(eq + 1);
    }
  }
  if (!saw_end) throw StateError("snapshot: truncated file '" + path + "'");
  return snap;
}

}  // namespace

void Engine::save_snapshot(const std::string& path) const {
  if (!trained_) throw ContractError("save_snapshot: engine not trained");
  std::ostringstream out;
  out << "lakegp-state v1\n";
  out << "base_year=" << base_year_ << '\n';
  out << "train_first=" << format_date(train_first_) << '\n';
  out << "train_last=" << format_date(train_last_) << '\n';
  out << "current=" << format_date(current_) << '\n';
  out << "with_phi=" << (cfg_.with_phi ? 1 : 0) << '\n';
  out << "vecchia_m=" << cfg_.vecchia_m << '\n';
  out << "refit_cadence=" << cfg_.refit_cadence << '\n';
  out << "seed=" << cfg_.seed << '\n';
  out << "steps_since_refit=" << steps_since_refit_ << '\n';
  out << "refit_count=" << refit_count_ << '\n';
  out << "ensemble_digest=" << ensemble_digest(corpus_) << '\n';
  out << "field_digest=" << field_digest(field_) << '\n';
  out << "ogp_rep_count=" << (ogp_rs_.n() > 0 ? ogp_rs_.counts[0] : 0) << '\n';

  if (cfg_.with_phi) {
    write_gp(out, "surr_phi_mean", phi_mode_.surrogate.mean_gp);
    write_gp(out, "surr_phi_var", phi_mode_.surrogate.var_gp);
    write_gp(out, "bias_phi", phi_mode_.bias.gp);
  }
  write_gp(out, "surr_nophi_mean", nophi_mode_.surrogate.mean_gp);
  write_gp(out, "surr_nophi_var", nophi_mode_.surrogate.var_gp);
  write_gp(out, "bias_nophi", nophi_mode_.bias.gp);
  write_gp(out, "ogp_mean", ogp_.mean_gp);
  write_gp(out, "ogp_var", ogp_.var_gp);

  if (cfg_.with_phi) write_cache(out, "musk_phi", phi_mode_.mu_sk);
  write_cache(out, "musk_nophi", nophi_mode_.mu_sk);
  out << "end\n";

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write snapshot '" + path + "'");
  f << out.str();
  if (!f) throw IoError("write failed for snapshot '" + path + "'");
}

Engine Engine::load_snapshot(const std::string& path, const CampaignStore& store,
                             const EngineConfig& cfg) {
  SnapshotData snap = parse_snapshot(path);

  if ((snap.scalar_int("with_phi") != 0) != cfg.with_phi)
    throw StateError("snapshot: with_phi does not match the configuration");
  if (snap.scalar_int("vecchia_m") != cfg.vecchia_m)
    throw StateError("snapshot: vecchia_m does not match the configuration");
  if (snap.scalar_int("refit_cadence") != cfg.refit_cadence)
    throw StateError("snapshot: refit_cadence does not match the configuration");
  if (static_cast<uint64_t>(snap.scalar_int("seed")) != cfg.seed)
    throw StateError("snapshot: seed does not match the configuration");

  Engine e(cfg);
  e.base_year_ = static_cast<int>(snap.scalar_int("base_year"));
  e.train_first_ = parse_date(snap.scalar("train_first"));
  e.train_last_ = parse_date(snap.scalar("train_last"));
  e.current_ = parse_date(snap.scalar("current"));
  e.steps_since_refit_ = static_cast<int>(snap.scalar_int("steps_since_refit"));
  e.refit_count_ = static_cast<int>(snap.scalar_int("refit_count"));

  e.field_ = store.field_between(kMinDay, e.current_);
  e.field_.rebuild_index();
  e.corpus_ = store.ensemble_between(e.train_first_, e.current_);
  if (field_digest(e.field_) != static_cast<uint64_t>(snap.scalar_int("field_digest")))
    throw StateError("snapshot: field data does not match the recorded digest");
  if (ensemble_digest(e.corpus_) != static_cast<uint64_t>(snap.scalar_int("ensemble_digest")))
    throw StateError("snapshot: ensemble data does not match the recorded digest");

  e.corpus_ranges_.clear();
  for (int64_t i = 0; i < e.corpus_.size(); ++i) {
    const CivilDay r = e.corpus_.ref_day[i];
    if (e.corpus_ranges_.empty() || e.corpus_ranges_.back().first != r)
      e.corpus_ranges_.push_back({r, {i, i + 1}});
    else
      e.corpus_ranges_.back().second.second = i + 1;
  }

  e.rs_ = collapse(e.corpus_, e.base_year_);
  e.derive_grid();
  e.rebuild_mode_designs();

  auto restore_mode = [&](ModePipeline& mode, const std::string& prefix,
                          const std::string& cache_name) {
    const auto& mean_rec = snap.gp("surr_" + prefix + "_mean");
    const auto& var_rec = snap.gp("surr_" + prefix + "_var");
    mode.surrogate.mean_gp =
        gp_from_params(mode.xbar, e.rs_.ybar, mean_rec.hp, mean_rec.dense, cfg.vecchia_m);
    mode.surrogate.var_gp = gp_from_params(mode.xbar, e.rs_.s2.array().sqrt(), var_rec.hp,
                                           var_rec.dense, cfg.vecchia_m);
    mode.surrogate.rep_count = e.rs_.counts[0];
    auto it = snap.caches.find(cache_name);
    if (it == snap.caches.end() || it->second.size() != e.rs_.n())
      throw StateError("snapshot: surrogate-mean cache missing or wrong length");
    mode.mu_sk = it->second;
    ReplicateSet rsv;
    rsv.Xbar = mode.xbar;
    rsv.ybar = e.rs_.ybar;
    rsv.s2 = e.rs_.s2;
    rsv.counts = e.rs_.counts;
    mode.disc = build_discrepancies(mode.surrogate, rsv, e.field_, e.base_year_, &mode.mu_sk);
    const auto& bias_rec = snap.gp("bias_" + prefix);
    mode.bias.gp =
        gp_from_params(mode.disc.X, mode.disc.y, bias_rec.hp, bias_rec.dense, cfg.vecchia_m);
  };
  if (cfg.with_phi) restore_mode(e.phi_mode_, "phi", "musk_phi");
  restore_mode(e.nophi_mode_, "nophi", "musk_nophi");

  e.ogp_rs_ = build_ogp_replicates(e.field_, e.train_last_);
  if (e.ogp_rs_.n() == 0 || e.ogp_rs_.counts[0] != snap.scalar_int("ogp_rep_count"))
    throw StateError("snapshot: OGP replicate structure does not match");
  const auto& om = snap.gp("ogp_mean");
  const auto& ov = snap.gp("ogp_var");
  e.ogp_.mean_gp = gp_from_params(e.ogp_rs_.Xbar, e.ogp_rs_.ybar, om.hp, om.dense, cfg.vecchia_m);
  e.ogp_.var_gp = gp_from_params(e.ogp_rs_.Xbar, e.ogp_rs_.s2.array().sqrt(), ov.hp, ov.dense,
                                 cfg.vecchia_m);
  e.ogp_.rep_count = e.ogp_rs_.counts[0];

  e.trained_ = true;
  return e;
}

}  // namespace lakegp
