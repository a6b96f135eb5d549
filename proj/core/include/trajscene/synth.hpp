#pragma once

#include <cstdint>
#include <vector>

#include "trajscene/osm.hpp"
#include "trajscene/types.hpp"

namespace trajscene {

/// Generator parameters for one travel mode.
struct ModeProfile {
  double speed_mean_mps = 1.0;
  double speed_sd_mps = 0.1;
  double min_speed_mps = 0.5;
  double duration_min_s = 300.0;
  double duration_max_s = 900.0;
  double turn_prob = 0.3;         // chance of turning at an intersection
  double stop_every_s = 0.0;      // mean time between ad-hoc stops, 0 = none
  double stop_min_s = 0.0;
  double stop_max_s = 0.0;
  double station_dwell_min_s = 0.0;  // dwell at bus stops / subway stations
  double station_dwell_max_s = 0.0;
};

/// Desk-scale stand-in for a labeled GPS corpus: a grid city with arterial
/// bus routes, subway lines and stations, and per-mode trajectories with
/// distinct kinematic signatures.
struct SynthConfig {
  int per_mode = 100;
  std::uint64_t seed = 42;
  double origin_lat = 39.90;
  double origin_lon = 116.30;
  double city_size_m = 12000.0;
  double block_m = 250.0;
  int arterial_every = 4;        // every n-th grid line is an arterial bus route
  double bus_stop_spacing_m = 500.0;
  double subway_station_spacing_m = 1200.0;
  double sample_interval_s = 3.0;
  double gps_noise_m = 3.0;
  double start_ts = 1230768000.0;  // 2009-01-01T00:00:00Z
  double time_span_days = 120.0;

  ModeProfile walk{1.2, 0.3, 0.4, 300.0, 1200.0, 0.5, 90.0, 3.0, 15.0, 0.0, 0.0};
  ModeProfile bike{4.0, 1.0, 1.5, 300.0, 1200.0, 0.3, 240.0, 3.0, 12.0, 0.0, 0.0};
  ModeProfile bus{7.0, 2.0, 3.0, 420.0, 1500.0, 0.05, 0.0, 0.0, 0.0, 20.0, 40.0};
  ModeProfile car{11.0, 4.0, 4.0, 300.0, 1200.0, 0.2, 600.0, 5.0, 30.0, 0.0, 0.0};
  ModeProfile subway{15.0, 3.0, 8.0, 420.0, 1500.0, 0.0, 0.0, 0.0, 0.0, 20.0, 45.0};

  const ModeProfile& profile(ModeLabel mode) const;
};

struct SynthCorpus {
  std::vector<TrajectorySegment> segments;
  osm::Extract osm;
};

/// Deterministic for a given config.
SynthCorpus synthesize(const SynthConfig& cfg);

}  // namespace trajscene
