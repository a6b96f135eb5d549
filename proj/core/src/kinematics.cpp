#include "trajscene/kinematics.hpp"

#include <algorithm>
#include <cmath>

#include "trajscene/civil_time.hpp"
#include "trajscene/error.hpp"
#include "trajscene/geo.hpp"

namespace trajscene {

std::string_view to_string(DayType d) { return d == DayType::weekend ? "weekend" : "weekday"; }

std::string_view to_string(TimeOfDay t) {
  switch (t) {
    case TimeOfDay::morning_peak: return "morning_peak";
    case TimeOfDay::evening_peak: return "evening_peak";
    case TimeOfDay::daytime_offpeak: return "daytime_offpeak";
    case TimeOfDay::night: return "night";
  }
  return "daytime_offpeak";
}

void KinematicsConfig::validate() const {
  if (!(stationary_speed_mps > 0.0)) throw ConfigError("kinematics.stationary_speed_mps must be > 0");
  if (!(brief_min_s >= 0.0 && brief_max_s >= brief_min_s)) {
    throw ConfigError("kinematics brief window must satisfy 0 <= brief_min_s <= brief_max_s");
  }
  if (!(prolonged_min_s >= brief_max_s)) {
    throw ConfigError("kinematics.prolonged_min_s must be >= brief_max_s");
  }
  if (!(sharp_turn_deg > 0.0 && sharp_turn_deg <= 180.0)) {
    throw ConfigError("kinematics.sharp_turn_deg must be in (0, 180]");
  }
  if (!(min_leg_m >= 0.0)) throw ConfigError("kinematics.min_leg_m must be >= 0");
  if (!(local_utc_offset_h >= -14.0 && local_utc_offset_h <= 14.0)) {
    throw ConfigError("kinematics.local_utc_offset_h must be within [-14, 14]");
  }
}

double path_length_m(const TrajectorySegment& seg) {
  double total = 0.0;
  for (std::size_t i = 1; i < seg.points.size(); ++i) {
    total += geo::haversine_m(seg.points[i - 1], seg.points[i]);
  }
  return total;
}

double straight_line_m(const TrajectorySegment& seg) {
  if (seg.points.empty()) return 0.0;
  return geo::haversine_m(seg.points.front(), seg.points.back());
}

std::optional<double> detour_index(const TrajectorySegment& seg) {
  const double chord = straight_line_m(seg);
  if (!(chord > 0.0)) return std::nullopt;
  return path_length_m(seg) / chord;
}

std::vector<double> leg_speeds(const TrajectorySegment& seg) {
  std::vector<double> out;
  if (seg.points.size() < 2) return out;
  out.reserve(seg.points.size() - 1);
  for (std::size_t i = 1; i < seg.points.size(); ++i) {
    const double dt = seg.points[i].ts - seg.points[i - 1].ts;
    if (!(dt > 0.0)) {
      throw DegenerateSegmentError("segment " + seg.segment_id + " has a non-positive time step");
    }
    out.push_back(geo::haversine_m(seg.points[i - 1], seg.points[i]) / dt);
  }
  return out;
}

SpeedProfile speed_profile(const TrajectorySegment& seg) {
  if (seg.points.size() < 2 || !(seg.duration_s() > 0.0)) {
    throw DegenerateSegmentError("segment " + seg.segment_id + " has zero duration");
  }
  const auto speeds = leg_speeds(seg);
  SpeedProfile sp;
  sp.avg_mps = path_length_m(seg) / seg.duration_s();
  const auto [mn, mx] = std::minmax_element(speeds.begin(), speeds.end());
  sp.min_mps = *mn;
  sp.max_mps = *mx;
  double mean = 0.0;
  for (double s : speeds) mean += s;
  mean /= static_cast<double>(speeds.size());
  double var = 0.0;
  for (double s : speeds) var += (s - mean) * (s - mean);
  sp.std_mps = std::sqrt(var / static_cast<double>(speeds.size()));
  return sp;
}

int turn_analysis(const TrajectorySegment& seg, double sharp_turn_deg, double min_leg_m) {
  if (seg.points.size() < 3) return 0;
  int count = 0;
  std::optional<double> prev;
  for (std::size_t i = 1; i < seg.points.size(); ++i) {
    const auto& a = seg.points[i - 1];
    const auto& b = seg.points[i];
    if (geo::haversine_m(a, b) < min_leg_m) continue;
    const double bearing = geo::initial_bearing_deg(a, b);
    if (prev && geo::heading_change_deg(*prev, bearing) >= sharp_turn_deg) ++count;
    prev = bearing;
  }
  return count;
}

StopSummary stop_analysis(const TrajectorySegment& seg, double stationary_speed_mps,
                          double brief_max_s, double prolonged_min_s, double brief_min_s) {
  StopSummary out;
  const auto speeds = leg_speeds(seg);
  std::size_t i = 0;
  while (i < speeds.size()) {
    if (speeds[i] >= stationary_speed_mps) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < speeds.size() && speeds[j + 1] < stationary_speed_mps) ++j;
    InactivityPeriod p;
    p.start_ts = seg.points[i].ts;
    p.end_ts = seg.points[j + 1].ts;
    p.duration_s = p.end_ts - p.start_ts;
    if (p.duration_s >= brief_min_s && p.duration_s <= brief_max_s) ++out.brief_count;
    if (p.duration_s > prolonged_min_s) ++out.prolonged_count;
    out.periods.push_back(p);
    i = j + 1;
  }
  return out;
}

DayType day_type_at(double ts, double local_utc_offset_h) {
  const CivilTime t = civil_from_utc(ts, local_utc_offset_h);
  return (t.weekday == 0 || t.weekday == 6) ? DayType::weekend : DayType::weekday;
}

TimeOfDay time_of_day_at(double ts, double local_utc_offset_h) {
  const int h = civil_from_utc(ts, local_utc_offset_h).hour;
  if (h >= 7 && h < 9) return TimeOfDay::morning_peak;
  if (h >= 17 && h < 19) return TimeOfDay::evening_peak;
  if (h >= 22 || h < 6) return TimeOfDay::night;
  return TimeOfDay::daytime_offpeak;
}

TemporalInfo temporal_info(const TrajectorySegment& seg, const KinematicsConfig& cfg) {
  TemporalInfo t;
  t.start_ts = seg.start_ts();
  t.end_ts = seg.end_ts();
  t.duration_s = t.end_ts - t.start_ts;
  t.day_type = day_type_at(t.start_ts, cfg.local_utc_offset_h);
  t.time_of_day = time_of_day_at(t.start_ts, cfg.local_utc_offset_h);
  t.inactivity_periods = stop_analysis(seg, cfg.stationary_speed_mps, cfg.brief_max_s,
                                       cfg.prolonged_min_s, cfg.brief_min_s)
                             .periods;
  return t;
}

KinematicsReport analyze(const TrajectorySegment& seg, const KinematicsConfig& cfg) {
  validate(seg);
  KinematicsReport r;
  r.segment_id = seg.segment_id;

  const SpeedProfile sp = speed_profile(seg);
  const StopSummary stops = stop_analysis(seg, cfg.stationary_speed_mps, cfg.brief_max_s,
                                          cfg.prolonged_min_s, cfg.brief_min_s);

  r.temporal.start_ts = seg.start_ts();
  r.temporal.end_ts = seg.end_ts();
  r.temporal.duration_s = seg.duration_s();
  r.temporal.day_type = day_type_at(seg.start_ts(), cfg.local_utc_offset_h);
  r.temporal.time_of_day = time_of_day_at(seg.start_ts(), cfg.local_utc_offset_h);
  r.temporal.inactivity_periods = stops.periods;

  auto& d = r.dynamics;
  d.avg_speed_mps = sp.avg_mps;
  d.speed_min_mps = sp.min_mps;
  d.speed_max_mps = sp.max_mps;
  d.speed_std_mps = sp.std_mps;
  d.sharp_turn_count = turn_analysis(seg, cfg.sharp_turn_deg, cfg.min_leg_m);
  d.brief_stop_count = stops.brief_count;
  d.prolonged_stop_count = stops.prolonged_count;
  d.path_length_m = path_length_m(seg);
  d.straight_line_m = straight_line_m(seg);
  if (d.straight_line_m > 0.0) d.detour_index = d.path_length_m / d.straight_line_m;
  return r;
}

}  // namespace trajscene
