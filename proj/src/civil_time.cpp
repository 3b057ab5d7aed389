#include "ripplerec/civil_time.hpp"

#include <charconv>
#include <cstdio>

#include "ripplerec/errors.hpp"

namespace ripplerec {

namespace {

int64_t floor_div(int64_t a, int64_t b) {
  int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const int64_t era = floor_div(y, 400);
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<int64_t>(doe) - 719468;
}

void civil_from_days(int64_t z, int& y, int& m, int& d) {
  z += 719468;
  const int64_t era = floor_div(z, 146097);
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const int64_t yy = static_cast<int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  y = static_cast<int>(yy + (m <= 2));
}

int day_of_week(int64_t days) {
  return static_cast<int>(((days % 7) + 11) % 7);  // 1970-01-01 was a Thursday
}

std::string format_day(int64_t days) {
  int y, m, d;
  civil_from_days(days, y, m, d);
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, d);
  return buf;
}

int64_t parse_day(std::string_view text) {
  int y = 0, m = 0, d = 0;
  if (text.size() != 10 || text[4] != '-' || text[7] != '-' ||
      std::from_chars(text.data(), text.data() + 4, y).ec != std::errc{} ||
      std::from_chars(text.data() + 5, text.data() + 7, m).ec != std::errc{} ||
      std::from_chars(text.data() + 8, text.data() + 10, d).ec != std::errc{}) {
    throw ConfigError("bad date, expected YYYY-MM-DD: '" + std::string(text) + "'");
  }
  if (m < 1 || m > 12 || d < 1 || d > 31) {
    throw ConfigError("date out of range: '" + std::string(text) + "'");
  }
  return days_from_civil(y, m, d);
}

TimezoneRule TimezoneRule::parse(std::string_view spec) {
  if (spec.empty() || spec == "UTC" || spec == "utc") return utc();
  if (spec == "Europe/Warsaw") return europe_warsaw();
  if (spec.rfind("UTC", 0) == 0 && spec.size() > 3 &&
      (spec[3] == '+' || spec[3] == '-')) {
    const int sign = spec[3] == '-' ? -1 : 1;
    std::string_view rest = spec.substr(4);
    int hours = 0, minutes = 0;
    const auto colon = rest.find(':');
    std::string_view hpart = colon == std::string_view::npos ? rest : rest.substr(0, colon);
    auto hres = std::from_chars(hpart.data(), hpart.data() + hpart.size(), hours);
    bool ok = hres.ec == std::errc{} && hres.ptr == hpart.data() + hpart.size();
    if (ok && colon != std::string_view::npos) {
      std::string_view mpart = rest.substr(colon + 1);
      auto mres = std::from_chars(mpart.data(), mpart.data() + mpart.size(), minutes);
      ok = mres.ec == std::errc{} && mres.ptr == mpart.data() + mpart.size();
    }
    if (ok && hours <= 14 && minutes < 60) {
      return TimezoneRule(Kind::Fixed, sign * (hours * 3600 + minutes * 60),
                          std::string(spec));
    }
  }
  throw ConfigError("unsupported timezone rule: '" + std::string(spec) +
                    "' (use Europe/Warsaw, UTC, or UTC±HH[:MM])");
}

int TimezoneRule::offset_seconds_at(int64_t ts) const {
  if (kind_ == Kind::Fixed) return fixed_offset_;
  // Europe/Warsaw: CET (+1) outside summer time, CEST (+2) inside. EU rule:
  // summer time runs from the last Sunday of March 01:00 UTC to the last
  // Sunday of October 01:00 UTC.
  int y, m, d;
  civil_from_days(floor_div(ts, 86400), y, m, d);
  const auto last_sunday = [](int year, int month, int last_dom) {
    const int64_t z = days_from_civil(year, month, last_dom);
    return z - day_of_week(z);
  };
  const int64_t dst_start = last_sunday(y, 3, 31) * 86400 + 3600;
  const int64_t dst_end = last_sunday(y, 10, 31) * 86400 + 3600;
  const bool summer = ts >= dst_start && ts < dst_end;
  return summer ? 7200 : 3600;
}

int64_t TimezoneRule::local_day(int64_t ts) const {
  return floor_div(ts + offset_seconds_at(ts), 86400);
}

}  // namespace ripplerec
