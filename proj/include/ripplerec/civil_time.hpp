#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace ripplerec {

// Days since 1970-01-01 for a proleptic Gregorian date.
int64_t days_from_civil(int year, int month, int day);
void civil_from_days(int64_t days, int& year, int& month, int& day);

// 0 = Sunday ... 6 = Saturday.
int day_of_week(int64_t days);

std::string format_day(int64_t days);        // YYYY-MM-DD
int64_t parse_day(std::string_view text);    // throws ConfigError on bad input

// Day-boundary rule. The dataset comes from a Polish news service, so the
// default zone is Europe/Warsaw; the EU summer-time rule is implemented
// directly (last Sunday of March 01:00 UTC to last Sunday of October
// 01:00 UTC) to avoid a tzdata dependency. Fixed offsets are also accepted:
// "UTC", "UTC+2", "UTC-05:30".
class TimezoneRule {
public:
  static TimezoneRule parse(std::string_view spec);
  static TimezoneRule utc() { return TimezoneRule(Kind::Fixed, 0, "UTC"); }
  static TimezoneRule europe_warsaw() {
    return TimezoneRule(Kind::EuropeWarsaw, 0, "Europe/Warsaw");
  }

  int offset_seconds_at(int64_t unix_ts) const;

  // Local calendar day (days since epoch of the local civil date).
  int64_t local_day(int64_t unix_ts) const;

  const std::string& name() const { return name_; }

private:
  enum class Kind { Fixed, EuropeWarsaw };
  TimezoneRule(Kind kind, int offset, std::string name)
      : kind_(kind), fixed_offset_(offset), name_(std::move(name)) {}

  Kind kind_;
  int fixed_offset_;
  std::string name_;
};

}  // namespace ripplerec
