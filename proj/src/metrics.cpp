#include "lakegp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "lakegp/common.hpp"

namespace lakegp {

namespace {
constexpr double kHalfLog2Pi = 0.91893853320467274178;
constexpr double kSdFloor = 1e-6;
}  // namespace

const char* model_name(ModelTag tag) {
  switch (tag) {
    case ModelTag::GPBC: return "GPBC";
    case ModelTag::GPBC_NOPHI: return "GPBC_NOPHI";
    case ModelTag::GPGLM: return "GPGLM";
    case ModelTag::OGP: return "OGP";
    case ModelTag::GLM_RAW: return "GLM_RAW";
  }
  return "?";
}

ModelTag parse_model(const std::string& name) {
  for (ModelTag t : {ModelTag::GPBC, ModelTag::GPBC_NOPHI, ModelTag::GPGLM, ModelTag::OGP,
                     ModelTag::GLM_RAW})
    if (name == model_name(t)) return t;
  throw DataError("unknown model tag '" + name + "'");
}

double log_score(double y, double mean, double sd) {
  if (!(sd > 0.0)) throw ContractError("log_score: sd must be positive");
  const double z = (y - mean) / sd;
  return -kHalfLog2Pi - std::log(sd) - 0.5 * z * z;
}

int coverage90(double y, double mean, double sd) {
  if (!(sd >= 0.0)) throw ContractError("coverage90: sd must be nonnegative");
  return std::abs(y - mean) <= kQ95 * sd ? 1 : 0;
}

const char* group_key_name(GroupBy g) {
  switch (g) {
    case GroupBy::Horizon: return "horizon";
    case GroupBy::Depth: return "depth";
    case GroupBy::DoyMonth: return "doy_month";
  }
  return "?";
}

std::vector<ScoreRow> aggregate(const std::vector<ForecastRecord>& records, GroupBy group) {
  struct Acc {
    double sse = 0.0, score = 0.0, width = 0.0;
    int64_t covered = 0, n = 0, floored = 0;
  };
  std::map<std::pair<int, int>, Acc> groups;  // (model, group value)

  for (const ForecastRecord& r : records) {
    if (!r.has_truth) continue;
    int gv = 0;
    switch (group) {
      case GroupBy::Horizon: gv = r.horizon; break;
      case GroupBy::Depth: gv = r.depth; break;
      case GroupBy::DoyMonth: gv = from_civil(r.ref_day).month; break;
    }
    Acc& a = groups[{static_cast<int>(r.model), gv}];
    const double err = r.truth - r.mean;
    a.sse += err * err;
    double sd = r.sd;
    if (sd < kSdFloor) {
      sd = kSdFloor;
      ++a.floored;
    }
    a.score += log_score(r.truth, r.mean, sd);
    a.covered += coverage90(r.truth, r.mean, sd);
    a.width += 2.0 * kQ95 * r.sd;
    ++a.n;
  }

  std::vector<ScoreRow> out;
  out.reserve(groups.size());
  for (const auto& [key, a] : groups) {
    ScoreRow row;
    row.model = static_cast<ModelTag>(key.first);
    row.group = group;
    row.group_value = key.second;
    row.rmse = std::sqrt(a.sse / a.n);
    row.mean_log_score = a.score / a.n;
    row.coverage = static_cast<double>(a.covered) / a.n;
    row.mean_width = a.width / a.n;
    row.n_pairs = a.n;
    row.n_floored = a.floored;
    out.push_back(row);
  }
  return out;
}

}  // namespace lakegp
