#pragma once

#include <string>

namespace trajscene {

/// Broken-down wall-clock time. `weekday` is 0 = Sunday ... 6 = Saturday.
struct CivilTime {
  int year = 1970;
  unsigned month = 1;
  unsigned day = 1;
  int hour = 0;
  int minute = 0;
  double second = 0.0;
  unsigned weekday = 4;
};

/// Seconds since the epoch for a UTC wall-clock time. Returns false on an
/// invalid calendar date.
bool utc_from_civil(int year, unsigned month, unsigned day, int hour, int minute, double second,
                    double& out);

/// Wall-clock time of `ts` shifted by `utc_offset_h` hours.
CivilTime civil_from_utc(double ts, double utc_offset_h = 0.0);

/// "YYYY-MM-DD HH:MM:SS" (seconds truncated).
std::string format_civil(const CivilTime& t);

const char* weekday_name(unsigned weekday);

}  // namespace trajscene
