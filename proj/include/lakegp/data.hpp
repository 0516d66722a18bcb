#pragma once

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "lakegp/dates.hpp"

namespace lakegp {

/// Raw simulator output: one row per (reference date, horizon, depth, ensemble member).
struct RawEnsemble {
  std::vector<CivilDay> ref_day;
  std::vector<int16_t> horizon;
  std::vector<int16_t> depth;
  std::vector<int16_t> member;
  std::vector<double> temp;

  int64_t size() const { return static_cast<int64_t>(temp.size()); }

  void push(CivilDay r, int h, int d, int xi, double v) {
    ref_day.push_back(r);
    horizon.push_back(static_cast<int16_t>(h));
    depth.push_back(static_cast<int16_t>(d));
    member.push_back(static_cast<int16_t>(xi));
    temp.push_back(v);
  }

  void append(const RawEnsemble& other) {
    ref_day.insert(ref_day.end(), other.ref_day.begin(), other.ref_day.end());
    horizon.insert(horizon.end(), other.horizon.begin(), other.horizon.end());
    depth.insert(depth.end(), other.depth.begin(), other.depth.end());
    member.insert(member.end(), other.member.begin(), other.member.end());
    temp.insert(temp.end(), other.temp.begin(), other.temp.end());
  }
};

/// Sensor measurements keyed by (date, depth).
struct FieldSeries {
  std::vector<CivilDay> day;
  std::vector<int16_t> depth;
  std::vector<double> temp;

  int64_t size() const { return static_cast<int64_t>(temp.size()); }

  void push(CivilDay d, int dep, double v) {
    day.push_back(d);
    depth.push_back(static_cast<int16_t>(dep));
    temp.push_back(v);
    index_[key(d, dep)] = temp.size() - 1;
  }

  std::optional<double> lookup(CivilDay d, int dep) const {
    auto it = index_.find(key(d, dep));
    if (it == index_.end()) return std::nullopt;
    return temp[it->second];
  }

  void rebuild_index() {
    index_.clear();
    index_.reserve(temp.size());
    for (size_t i = 0; i < temp.size(); ++i) index_[key(day[i], depth[i])] = i;
  }

 private:
  static int64_t key(CivilDay d, int dep) {
    return (static_cast<int64_t>(d) << 8) | static_cast<int64_t>(dep & 0xff);
  }
  std::unordered_map<int64_t, size_t> index_;
};

}  // namespace lakegp
