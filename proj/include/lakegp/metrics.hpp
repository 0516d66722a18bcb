#pragma once

#include <string>
#include <vector>

#include "lakegp/dates.hpp"

namespace lakegp {

enum class ModelTag { GPBC, GPBC_NOPHI, GPGLM, OGP, GLM_RAW };

const char* model_name(ModelTag tag);
ModelTag parse_model(const std::string& name);

/// One issued forecast, optionally joined with its later-observed truth.
struct ForecastRecord {
  ModelTag model = ModelTag::GPBC;
  CivilDay ref_day = 0;
  int horizon = 0;
  int depth = 0;
  double mean = 0.0;
  double sd = 0.0;
  double lo90 = 0.0;
  double hi90 = 0.0;
  bool has_truth = false;
  double truth = 0.0;
};

/// Gaussian predictive log density: -0.5 log(2 pi) - log(sd) - (y-mean)^2/(2 sd^2).
double log_score(double y, double mean, double sd);

/// 1 iff |y - mean| <= 1.6449 * sd (closed interval).
int coverage90(double y, double mean, double sd);

enum class GroupBy { Horizon, Depth, DoyMonth };

const char* group_key_name(GroupBy g);

struct ScoreRow {
  ModelTag model = ModelTag::GPBC;
  GroupBy group = GroupBy::Horizon;
  int group_value = 0;
  double rmse = 0.0;
  double mean_log_score = 0.0;
  double coverage = 0.0;
  double mean_width = 0.0;
  int64_t n_pairs = 0;
  int64_t n_floored = 0;  // records scored with the degenerate-sd floor
};

/// Per-group verification metrics over records that carry truth. Groups are
/// emitted in (model, group value) order; empty groups are skipped. Degenerate
/// sd below 1e-6 °C is floored to 1e-6 for scoring and counted in n_floored
/// (width keeps the raw sd).
std::vector<ScoreRow> aggregate(const std::vector<ForecastRecord>& records, GroupBy group);

}  // namespace lakegp
