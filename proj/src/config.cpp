#include "lakegp/config.hpp"

#include <charconv>
#include <fstream>

namespace lakegp {

namespace {

double to_double(const std::string& key, const std::string& s) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw IoError("config: bad number for '" + key + "': " + s);
  return v;
}

int64_t to_int(const std::string& key, const std::string& s) {
  int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw IoError("config: bad integer for '" + key + "': " + s);
  return v;
}

bool to_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw IoError("config: bad boolean for '" + key + "': " + s);
}

}  // namespace

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("config: cannot open '" + path + "'");

  RunConfig c;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw IoError("config:" + std::to_string(lineno) + ": expected key=value");
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 1);

    if (key == "ensemble_csv") c.ensemble_csv = val;
    else if (key == "field_csv") c.field_csv = val;
    else if (key == "output_dir") c.output_dir = val;
    else if (key == "state_dir") c.state_dir = val;
    else if (key == "with_phi") c.with_phi = to_bool(key, val);
    else if (key == "vecchia_m") c.vecchia_m = static_cast<int>(to_int(key, val));
    else if (key == "seed") c.seed = static_cast<uint64_t>(to_int(key, val));
    else if (key == "refit_cadence") c.refit_cadence = static_cast<int>(to_int(key, val));
    else if (key == "train_start") c.train_start = parse_date(val);
    else if (key == "train_end") c.train_end = parse_date(val);
    else if (key == "sim.seed") c.sim.seed = static_cast<uint64_t>(to_int(key, val));
    else if (key == "sim.start_date") c.sim.start = parse_date(val);
    else if (key == "sim.n_ref_days") c.sim.n_ref_days = static_cast<int>(to_int(key, val));
    else if (key == "sim.ref_stride") c.sim.ref_stride = static_cast<int>(to_int(key, val));
    else if (key == "sim.dense_from") c.sim.dense_from = static_cast<int>(to_int(key, val));
    else if (key == "sim.n_depths") c.sim.n_depths = static_cast<int>(to_int(key, val));
    else if (key == "sim.n_horizons") c.sim.n_horizons = static_cast<int>(to_int(key, val));
    else if (key == "sim.n_ensemble") c.sim.n_ensemble = static_cast<int>(to_int(key, val));
    else if (key == "sim.mean_temp") c.sim.mean_temp = to_double(key, val);
    else if (key == "sim.seasonal_amp") c.sim.seasonal_amp = to_double(key, val);
    else if (key == "sim.depth_damp") c.sim.depth_damp = to_double(key, val);
    else if (key == "sim.year_amp") c.sim.year_amp = to_double(key, val);
    else if (key == "sim.spread_growth") c.sim.spread_growth = to_double(key, val);
    else if (key == "sim.spread_depth_damp") c.sim.spread_depth_damp = to_double(key, val);
    else if (key == "sim.bias_const") c.sim.bias_const = to_double(key, val);
    else if (key == "sim.bias_seasonal") c.sim.bias_seasonal = to_double(key, val);
    else if (key == "sim.bias_depth") c.sim.bias_depth = to_double(key, val);
    else if (key == "sim.obs_noise") c.sim.obs_noise = to_double(key, val);
    else if (key == "sim.field_lead_days") c.sim.field_lead_days = static_cast<int>(to_int(key, val));
    else if (key == "sim.field_back_days") c.sim.field_back_days = static_cast<int>(to_int(key, val));
    else if (key == "sim.anomaly_start") c.sim.anomaly_start = static_cast<int>(to_int(key, val));
    else if (key == "sim.anomaly_len") c.sim.anomaly_len = static_cast<int>(to_int(key, val));
    else if (key == "sim.anomaly_amp") c.sim.anomaly_amp = to_double(key, val);
    else throw IoError("config:" + std::to_string(lineno) + ": unknown key '" + key + "'");
  }

  if (!c.ensemble_csv.empty() && c.ensemble_csv == c.field_csv)
    throw IoError("config: ensemble_csv and field_csv must be distinct paths");
  if (!c.output_dir.empty() && c.output_dir == c.state_dir)
    throw IoError("config: output_dir and state_dir must be distinct paths");
  if (c.vecchia_m < 1 || c.vecchia_m > 500)
    throw IoError("config: vecchia_m must be in [1, 500]");
  if (c.refit_cadence < 0) throw IoError("config: refit_cadence must be >= 0");
  return c;
}

}  // namespace lakegp
