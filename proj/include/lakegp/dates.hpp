#pragma once

#include <cstdint>
#include <string>

#include "lakegp/common.hpp"

namespace lakegp {

// Dates are plain civil-day serial numbers (days since 1970-01-01), so horizon
// arithmetic is integer addition and year boundaries roll over naturally.
using CivilDay = int32_t;

struct Ymd {
  int year;
  int month;
  int day;
};

// Howard Hinnant's civil-from-days / days-from-civil algorithms.
constexpr CivilDay to_civil(int y, int m, int d) {
  y -= m <= 2;
  const int era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                       static_cast<unsigned>(d) - 1u;
  const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
  return static_cast<CivilDay>(era * 146097 + static_cast<int>(doe) - 719468);
}

constexpr Ymd from_civil(CivilDay z0) {
  int z = z0 + 719468;
  const int era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const int y = static_cast<int>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp + (mp < 10 ? 3 : -9);
  return {y + (m <= 2), static_cast<int>(m), static_cast<int>(d)};
}

constexpr int year_of(CivilDay d) { return from_civil(d).year; }

// Day-of-year in 1..366.
constexpr int day_of_year(CivilDay d) { return d - to_civil(from_civil(d).year, 1, 1) + 1; }

// Civil day of day-of-year `t` (1-based) in year `y`.
constexpr CivilDay civil_of_doy(int y, int t) { return to_civil(y, 1, 1) + (t - 1); }

std::string format_date(CivilDay d);

// Parses strict ISO-8601 YYYY-MM-DD; throws IoError on malformed input.
CivilDay parse_date(const std::string& s);

}  // namespace lakegp
