#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "trajscene/types.hpp"

namespace trajscene {

enum class DayType { weekday, weekend };
enum class TimeOfDay { morning_peak, evening_peak, daytime_offpeak, night };

std::string_view to_string(DayType d);
std::string_view to_string(TimeOfDay t);

/// A maximal run of near-stationary legs.
struct InactivityPeriod {
  double start_ts = 0.0;
  double end_ts = 0.0;
  double duration_s = 0.0;

  friend bool operator==(const InactivityPeriod&, const InactivityPeriod&) = default;
};

struct TemporalInfo {
  double start_ts = 0.0;
  double end_ts = 0.0;
  double duration_s = 0.0;
  DayType day_type = DayType::weekday;
  TimeOfDay time_of_day = TimeOfDay::daytime_offpeak;
  std::vector<InactivityPeriod> inactivity_periods;
};

struct SpeedProfile {
  double avg_mps = 0.0;
  double min_mps = 0.0;
  double max_mps = 0.0;
  double std_mps = 0.0;
};

struct StopSummary {
  std::vector<InactivityPeriod> periods;
  int brief_count = 0;
  int prolonged_count = 0;
};

struct DynamicsInfo {
  double avg_speed_mps = 0.0;
  double speed_min_mps = 0.0;
  double speed_max_mps = 0.0;
  double speed_std_mps = 0.0;
  int sharp_turn_count = 0;
  int brief_stop_count = 0;
  int prolonged_stop_count = 0;
  double path_length_m = 0.0;
  double straight_line_m = 0.0;
  std::optional<double> detour_index;
};

struct KinematicsReport {
  std::string segment_id;
  TemporalInfo temporal;
  DynamicsInfo dynamics;
};

/// Thresholds used when deriving a report. Defaults mirror the observed
/// categories: stationary below 0.5 m/s, brief stops of 2-8 s, prolonged
/// stops above 10 s, sharp turns of 30 degrees or more.
struct KinematicsConfig {
  double stationary_speed_mps = 0.5;
  double brief_min_s = 2.0;
  double brief_max_s = 8.0;
  double prolonged_min_s = 10.0;
  double sharp_turn_deg = 30.0;
  double min_leg_m = 1.0;
  double local_utc_offset_h = 8.0;

  void validate() const;
};

double path_length_m(const TrajectorySegment& seg);
double straight_line_m(const TrajectorySegment& seg);

/// Path length over straight-line distance; nullopt when the endpoints coincide.
std::optional<double> detour_index(const TrajectorySegment& seg);

/// Per-leg speeds in m/s, one per consecutive pair of points.
std::vector<double> leg_speeds(const TrajectorySegment& seg);

/// Average speed is path length over duration; min/max/std (population)
/// are taken over per-leg speeds. Throws DegenerateSegmentError when the
/// segment has zero duration.
SpeedProfile speed_profile(const TrajectorySegment& seg);

/// Number of heading changes of at least `sharp_turn_deg` between consecutive
/// legs. Legs shorter than `min_leg_m` are skipped.
int turn_analysis(const TrajectorySegment& seg, double sharp_turn_deg = 30.0, double min_leg_m = 1.0);

StopSummary stop_analysis(const TrajectorySegment& seg, double stationary_speed_mps = 0.5,
                          double brief_max_s = 8.0, double prolonged_min_s = 10.0,
                          double brief_min_s = 2.0);

DayType day_type_at(double ts, double local_utc_offset_h);
TimeOfDay time_of_day_at(double ts, double local_utc_offset_h);

TemporalInfo temporal_info(const TrajectorySegment& seg, const KinematicsConfig& cfg = {});

KinematicsReport analyze(const TrajectorySegment& seg, const KinematicsConfig& cfg = {});

}  // namespace trajscene
