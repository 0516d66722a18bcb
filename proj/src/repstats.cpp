#include "lakegp/repstats.hpp"

#include <algorithm>
#include <numeric>

namespace lakegp {

namespace {

// Packed (year, day, horizon, depth) group key; ascending order is the
// lexicographic row order of the output.
inline uint64_t pack_key(int lambda, int t, int h, int d) {
  return (static_cast<uint64_t>(static_cast<uint16_t>(lambda)) << 48) |
         (static_cast<uint64_t>(static_cast<uint16_t>(t)) << 32) |
         (static_cast<uint64_t>(static_cast<uint16_t>(h)) << 16) |
         static_cast<uint64_t>(static_cast<uint16_t>(d));
}

}  // namespace

ReplicateSet collapse(const RawEnsemble& raw, int base_year) {
  const int64_t n_raw = raw.size();
  if (n_raw == 0) throw ContractError("collapse: empty dataset");

  std::vector<std::pair<uint64_t, double>> rows(n_raw);
  CivilDay cached_day = raw.ref_day[0];
  int cached_lambda = year_of(cached_day) - base_year;
  int cached_t = day_of_year(cached_day);
  for (int64_t i = 0; i < n_raw; ++i) {
    const CivilDay r = raw.ref_day[i];
    if (r != cached_day) {
      cached_day = r;
      cached_lambda = year_of(r) - base_year;
      cached_t = day_of_year(r);
    }
    rows[i] = {pack_key(cached_lambda, cached_t, raw.horizon[i], raw.depth[i]), raw.temp[i]};
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });

  // Count groups.
  int64_t n_groups = 0;
  for (int64_t i = 0; i < n_raw; ++i)
    if (i == 0 || rows[i].first != rows[i - 1].first) ++n_groups;

  ReplicateSet rs;
  rs.Xbar.roles = {Col::Day, Col::Depth, Col::Horizon, Col::Year};
  rs.Xbar.active = {0, 1, 2};
  rs.Xbar.values.resize(n_groups, 4);
  rs.ybar.resize(n_groups);
  rs.s2.resize(n_groups);
  rs.counts.resize(n_groups);

  int64_t gi = 0;
  int64_t start = 0;
  for (int64_t i = 1; i <= n_raw; ++i) {
    if (i == n_raw || rows[i].first != rows[start].first) {
      const int64_t count = i - start;
      const uint64_t key = rows[start].first;
      const int lambda = static_cast<int>(key >> 48);
      const int t = static_cast<int>((key >> 32) & 0xffff);
      const int h = static_cast<int>((key >> 16) & 0xffff);
      const int d = static_cast<int>(key & 0xffff);
      if (count < 2)
        throw ContractError("collapse: singleton replicate group at (year=" +
                            std::to_string(base_year + lambda) + ", day=" + std::to_string(t) +
                            ", horizon=" + std::to_string(h) + ", depth=" + std::to_string(d) +
                            ")");
      double sum = 0.0;
      for (int64_t j = start; j < i; ++j) sum += rows[j].second;
      const double mean = sum / static_cast<double>(count);
      double ss = 0.0;
      for (int64_t j = start; j < i; ++j) {
        const double dlt = rows[j].second - mean;
        ss += dlt * dlt;
      }
      rs.Xbar.values(gi, 0) = t;
      rs.Xbar.values(gi, 1) = d;
      rs.Xbar.values(gi, 2) = h;
      rs.Xbar.values(gi, 3) = lambda;
      rs.ybar[gi] = mean;
      rs.s2[gi] = ss / static_cast<double>(count - 1);
      rs.counts[gi] = static_cast<int>(count);
      ++gi;
      start = i;
    }
  }
  return rs;
}

Eigen::VectorXd standard_errors(const ReplicateSet& rs) {
  for (int i = 0; i < rs.counts.size(); ++i)
    if (rs.counts[i] < 2) throw ContractError("standard_errors: replicate counts must be >= 2");
  return rs.s2.array() / rs.counts.cast<double>().array();
}

}  // namespace lakegp
