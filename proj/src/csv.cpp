#include "lakegp/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>

namespace lakegp {

namespace {

void open_out(std::ofstream& f, const std::string& path, bool append) {
  f.open(path, append ? std::ios::binary | std::ios::app : std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
}

std::ifstream open_in(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for reading");
  return f;
}

void expect_header(std::istream& in, const std::string& path, const std::string& header) {
  std::string line;
  if (!std::getline(in, line)) throw IoError(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header)
    throw IoError(path + ": bad header '" + line + "', expected '" + header + "'");
}

// Splits `line` into exactly `n` comma-separated fields.
void split_fields(const std::string& line, std::string_view* out, int n, const std::string& path,
                  int64_t lineno) {
  size_t pos = 0;
  for (int i = 0; i < n; ++i) {
    size_t next = i + 1 < n ? line.find(',', pos) : std::string::npos;
    if (i + 1 < n && next == std::string::npos)
      throw IoError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(n) +
                    " fields");
    out[i] = std::string_view(line).substr(pos, next == std::string::npos ? line.size() - pos
                                                                          : next - pos);
    pos = next == std::string::npos ? line.size() : next + 1;
  }
  if (line.find(',', pos) != std::string::npos)
    throw IoError(path + ":" + std::to_string(lineno) + ": too many fields");
}

double parse_double(std::string_view s, const std::string& path, int64_t lineno) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw IoError(path + ":" + std::to_string(lineno) + ": bad number '" + std::string(s) + "'");
  return v;
}

int parse_int(std::string_view s, const std::string& path, int64_t lineno) {
  int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw IoError(path + ":" + std::to_string(lineno) + ": bad integer '" + std::string(s) + "'");
  return v;
}

}  // namespace

std::string format_value(double v) {
  char buf[400];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  std::string s(buf);
  const size_t dot = s.find('.');
  size_t last = s.size();
  while (last > dot + 1 && s[last - 1] == '0') --last;
  if (last == dot + 1) last = dot;  // drop a bare trailing '.'
  s.resize(last);
  if (s == "-0") s = "0";
  return s;
}

void write_ensemble_csv(const std::string& path, const RawEnsemble& data) {
  std::ofstream f;
  open_out(f, path, false);
  f << "ref_date,horizon,depth,ensemble_id,temp_c\n";
  std::string line;
  line.reserve(64);
  for (int64_t i = 0; i < data.size(); ++i) {
    line.clear();
    line += format_date(data.ref_day[i]);
    line += ',';
    line += std::to_string(data.horizon[i]);
    line += ',';
    line += std::to_string(data.depth[i]);
    line += ',';
    line += std::to_string(data.member[i]);
    line += ',';
    line += format_value(data.temp[i]);
    line += '\n';
    f << line;
  }
  if (!f) throw IoError("write failed for '" + path + "'");
}

RawEnsemble read_ensemble_csv(const std::string& path) {
  std::ifstream f = open_in(path);
  expect_header(f, path, "ref_date,horizon,depth,ensemble_id,temp_c");
  RawEnsemble out;
  std::string line;
  int64_t lineno = 1;
  std::string_view fields[5];
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line.back() == '\r') line.pop_back();
    split_fields(line, fields, 5, path, lineno);
    out.push(parse_date(std::string(fields[0])), parse_int(fields[1], path, lineno),
             parse_int(fields[2], path, lineno), parse_int(fields[3], path, lineno),
             parse_double(fields[4], path, lineno));
  }
  return out;
}

void write_field_csv(const std::string& path, const FieldSeries& data) {
  std::ofstream f;
  open_out(f, path, false);
  f << "date,depth,temp_c\n";
  for (int64_t i = 0; i < data.size(); ++i)
    f << format_date(data.day[i]) << ',' << data.depth[i] << ',' << format_value(data.temp[i])
      << '\n';
  if (!f) throw IoError("write failed for '" + path + "'");
}

FieldSeries read_field_csv(const std::string& path) {
  std::ifstream f = open_in(path);
  expect_header(f, path, "date,depth,temp_c");
  FieldSeries out;
  std::string line;
  int64_t lineno = 1;
  std::string_view fields[3];
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line.back() == '\r') line.pop_back();
    split_fields(line, fields, 3, path, lineno);
    out.push(parse_date(std::string(fields[0])), parse_int(fields[1], path, lineno),
             parse_double(fields[2], path, lineno));
  }
  return out;
}

void write_forecasts_csv(const std::string& path, const std::vector<ForecastRecord>& records,
                         bool append) {
  std::ofstream f;
  const bool fresh = !append || !std::ifstream(path).good();
  open_out(f, path, append && !fresh);
  if (fresh) f << "model,ref_date,horizon,depth,mean,sd,lo90,hi90\n";
  for (const ForecastRecord& r : records) {
    f << model_name(r.model) << ',' << format_date(r.ref_day) << ',' << r.horizon << ','
      << r.depth << ',' << format_value(r.mean) << ',' << format_value(r.sd) << ','
      << format_value(r.lo90) << ',' << format_value(r.hi90) << '\n';
  }
  if (!f) throw IoError("write failed for '" + path + "'");
}

std::vector<ForecastRecord> read_forecasts_csv(const std::string& path) {
  std::ifstream f = open_in(path);
  expect_header(f, path, "model,ref_date,horizon,depth,mean,sd,lo90,hi90");
  std::vector<ForecastRecord> out;
  std::string line;
  int64_t lineno = 1;
  std::string_view fields[8];
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line.back() == '\r') line.pop_back();
    split_fields(line, fields, 8, path, lineno);
    ForecastRecord r;
    r.model = parse_model(std::string(fields[0]));
    r.ref_day = parse_date(std::string(fields[1]));
    r.horizon = parse_int(fields[2], path, lineno);
    r.depth = parse_int(fields[3], path, lineno);
    r.mean = parse_double(fields[4], path, lineno);
    r.sd = parse_double(fields[5], path, lineno);
    r.lo90 = parse_double(fields[6], path, lineno);
    r.hi90 = parse_double(fields[7], path, lineno);
    out.push_back(r);
  }
  return out;
}

void write_scores_csv(const std::string& path, const std::vector<ScoreRow>& rows) {
  std::ofstream f;
  open_out(f, path, false);
  f << "model,group_key,group_value,rmse,log_score,coverage,width,n\n";
  for (const ScoreRow& r : rows) {
    f << model_name(r.model) << ',' << group_key_name(r.group) << ',' << r.group_value << ','
      << format_value(r.rmse) << ',' << format_value(r.mean_log_score) << ','
      << format_value(r.coverage) << ',' << format_value(r.mean_width) << ',' << r.n_pairs
      << '\n';
  }
  if (!f) throw IoError("write failed for '" + path + "'");
}

}  // namespace lakegp
