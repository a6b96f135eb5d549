#include "trajscene/civil_time.hpp"

#include <chrono>
#include <cmath>

#include <fmt/format.h>

namespace trajscene {

namespace chr = std::chrono;

bool utc_from_civil(int year, unsigned month, unsigned day, int hour, int minute, double second,
                    double& out) {
  const chr::year_month_day ymd{chr::year{year}, chr::month{month}, chr::day{day}};
  if (!ymd.ok() || hour < 0 || hour > 23 || minute < 0 || minute > 59 || second < 0.0 ||
      second >= 61.0) {
    return false;
  }
  const auto days = chr::sys_days{ymd}.time_since_epoch().count();
  out = static_cast<double>(days) * 86400.0 + hour * 3600.0 + minute * 60.0 + second;
  return true;
}

CivilTime civil_from_utc(double ts, double utc_offset_h) {
  const double local = ts + utc_offset_h * 3600.0;
  const double day_index = std::floor(local / 86400.0);
  double sod = local - day_index * 86400.0;
  const chr::sys_days days{chr::days{static_cast<long>(day_index)}};
  const chr::year_month_day ymd{days};
  const chr::weekday wd{days};

  CivilTime t;
  t.year = static_cast<int>(ymd.year());
  t.month = static_cast<unsigned>(ymd.month());
  t.day = static_cast<unsigned>(ymd.day());
  t.weekday = wd.c_encoding();
  t.hour = static_cast<int>(sod / 3600.0);
  sod -= t.hour * 3600.0;
  t.minute = static_cast<int>(sod / 60.0);
  t.second = sod - t.minute * 60.0;
  return t;
}

std::string format_civil(const CivilTime& t) {
  return fmt::format("{:04d}-{:02d}-{:02d} {:02d}:{:02d}:{:02d}", t.year, t.month, t.day, t.hour,
                     t.minute, static_cast<int>(t.second));
}

const char* weekday_name(unsigned weekday) {
  static constexpr const char* kNames[] = {"Sunday",   "Monday", "Tuesday", "Wednesday",
                                           "Thursday", "Friday", "Saturday"};
  return kNames[weekday % 7];
}

}  // namespace trajscene
