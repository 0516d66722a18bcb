#include "lakegp/dates.hpp"

#include <charconv>
#include <cstdio>

namespace lakegp {

std::string format_date(CivilDay d) {
  const Ymd ymd = from_civil(d);
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", ymd.year, ymd.month, ymd.day);
  return buf;
}

CivilDay parse_date(const std::string& s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-')
    throw IoError("bad date '" + s + "', expected YYYY-MM-DD");
  int y = 0, m = 0, d = 0;
  auto num = [&](int from, int to, int& out) {
    auto [p, ec] = std::from_chars(s.data() + from, s.data() + to, out);
    if (ec != std::errc() || p != s.data() + to)
      throw IoError("bad date '" + s + "', expected YYYY-MM-DD");
  };
  num(0, 4, y);
  num(5, 7, m);
  num(8, 10, d);
  if (m < 1 || m > 12 || d < 1 || d > 31) throw IoError("bad date '" + s + "'");
  return to_civil(y, m, d);
}

}  // namespace lakegp
