#pragma once

#include <memory>

#include "lakegp/biascorrect.hpp"
#include "lakegp/csv.hpp"

namespace lakegp {

/// Data feed abstraction. The engine only ever asks for data up to its current
/// date, which is what the leakage tests instrument.
class CampaignStore {
 public:
  virtual ~CampaignStore() = default;
  virtual bool has_ensemble(CivilDay ref) const = 0;
  /// Ensemble rows with ref_date in [first, last], in stored order.
  virtual RawEnsemble ensemble_between(CivilDay first, CivilDay last) const = 0;
  /// Field observations with date in [first, last], in stored order.
  virtual FieldSeries field_between(CivilDay first, CivilDay last) const = 0;
};

class InMemoryStore : public CampaignStore {
 public:
  InMemoryStore(RawEnsemble ensemble, FieldSeries field);
  bool has_ensemble(CivilDay ref) const override;
  RawEnsemble ensemble_between(CivilDay first, CivilDay last) const override;
  FieldSeries field_between(CivilDay first, CivilDay last) const override;

 private:
  RawEnsemble ensemble_;
  FieldSeries field_;
  std::vector<CivilDay> ref_days_;  // sorted distinct reference days
};

/// Five-day near-surface average ending at `ref` (depths 0 and 1). Missing
/// entries are carried forward from the most recent value at that depth, at
/// most 3 days back; beyond that the state is considered unknown.
double compute_phi(const FieldSeries& field, CivilDay ref);
double compute_phi(const FieldSeries& field, int t_doy, int lambda, int base_year);

/// Field observations up to train_last grouped by (day-of-year, depth) into
/// across-year replicates; groups off the modal count are dropped so the
/// replication is uniform.
ReplicateSet build_ogp_replicates(const FieldSeries& field, CivilDay train_last);

struct EngineConfig {
  bool with_phi = true;
  int vecchia_m = 30;
  uint64_t seed = 1;
  int refit_cadence = 7;  // hyperparameter re-estimation period in steps; 0 = never
};

/// Orchestrates the iterative daily loop: ingest, collapse, (re)fit, and emit
/// forecasts from the five comparators.
class Engine {
 public:
  explicit Engine(const EngineConfig& cfg) : cfg_(cfg) {}

  void initial_train(const CampaignStore& store, CivilDay train_first, CivilDay train_last);

  /// Processes the next calendar day: ingests its sensor truth and ensemble,
  /// updates the models per the refit schedule, and emits one forecast set per
  /// comparator (30 horizons x 10 depths each).
  std::vector<ForecastRecord> daily_step(const CampaignStore& store);

  /// Retrospective forecasts over [first, last] (within the trained window),
  /// with observed truth attached where available.
  std::vector<ForecastRecord> hindcast(CivilDay first, CivilDay last) const;

  CivilDay current_day() const { return current_; }
  CivilDay train_first() const { return train_first_; }
  CivilDay train_last() const { return train_last_; }
  int base_year() const { return base_year_; }
  double phi_at(CivilDay ref) const { return compute_phi(field_, ref); }
  bool trained() const { return trained_; }

  const HetSurrogate& surrogate(bool with_phi) const;
  const BiasModel& bias(bool with_phi) const;
  const HetSurrogate& ogp() const { return ogp_; }
  const ReplicateSet& replicates() const { return rs_; }
  const ReplicateSet& ogp_replicates() const { return ogp_rs_; }
  const DiscrepancyData& discrepancies(bool with_phi) const;
  const DesignMatrix& design(bool with_phi) const;

  void save_snapshot(const std::string& path) const;
  static Engine load_snapshot(const std::string& path, const CampaignStore& store,
                              const EngineConfig& cfg);

 private:
  struct ModePipeline {
    DesignMatrix xbar;      // collapsed inputs, phi attached in the phi mode
    HetSurrogate surrogate;
    Eigen::VectorXd mu_sk;  // cached surrogate means at the xbar rows
    DiscrepancyData disc;
    BiasModel bias;
  };

  void derive_grid();
  void rebuild_mode_designs();
  void extend_musk_cache(ModePipeline& mode, int old_n);
  void rebuild_discrepancies_and_bias_data(uint64_t salt);
  void refit_models();
  void fit_ogp();
  std::vector<ForecastRecord> emit_for(CivilDay ref, bool attach_truth) const;
  DesignMatrix query_design(CivilDay ref, bool with_phi) const;
  const ModePipeline& pipeline(bool with_phi) const;

  EngineConfig cfg_;
  bool trained_ = false;
  int base_year_ = 0;
  CivilDay train_first_ = 0;
  CivilDay train_last_ = 0;
  CivilDay current_ = 0;
  int steps_since_refit_ = 0;
  int refit_count_ = 0;

  RawEnsemble corpus_;  // appended in ref-date order
  std::vector<std::pair<CivilDay, std::pair<int64_t, int64_t>>> corpus_ranges_;
  FieldSeries field_;
  int h_max_ = 0;
  std::vector<int> depths_;

  ReplicateSet rs_;  // collapsed corpus (grows at the tail day over day)
  ModePipeline phi_mode_;
  ModePipeline nophi_mode_;
  HetSurrogate ogp_;
  ReplicateSet ogp_rs_;
};

}  // namespace lakegp
