#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "trajscene/geo.hpp"
#include "trajscene/types.hpp"

namespace trajscene::testing {

inline std::filesystem::path data_dir() { return TRAJSCENE_TEST_DATA; }

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("trajscene_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& leaf) const { return path_ / leaf; }

 private:
  std::filesystem::path path_;
};

/// Degrees of longitude spanning `m` meters along the equator of the model sphere.
inline double eq_deg(double m) { return geo::rad2deg(m / geo::kEarthRadiusM); }

/// Degrees of latitude spanning `m` meters along a meridian.
inline double merid_deg(double m) { return eq_deg(m); }

inline GpsPoint pt(double lat, double lon, double ts) { return GpsPoint{lon, lat, ts}; }

inline TrajectorySegment make_segment(std::vector<GpsPoint> points, std::string id = "t") {
  TrajectorySegment s;
  s.segment_id = std::move(id);
  s.points = std::move(points);
  return s;
}

/// Equatorial eastbound segment: `legs` legs of `leg_m` meters, each lasting `leg_s` seconds.
inline TrajectorySegment equator_run(int legs, double leg_m, double leg_s, double t0 = 1.0e9) {
  std::vector<GpsPoint> pts;
  for (int i = 0; i <= legs; ++i) pts.push_back(pt(0.0, eq_deg(leg_m * i), t0 + leg_s * i));
  return make_segment(std::move(pts));
}

/// 2000 m path with a 687 m chord over 645 s: 1343.5 m east then 656.5 m back
/// west along the equator at constant speed, sampled every ~1/10 of a leg.
inline TrajectorySegment detour_fixture(double t0 = 1236505098.0) {
  constexpr double kEast = 1343.5;
  constexpr double kWest = 656.5;
  constexpr double kDuration = 645.0;
  const double speed = (kEast + kWest) / kDuration;
  std::vector<GpsPoint> pts;
  for (int i = 0; i <= 10; ++i) {
    const double d = kEast * i / 10.0;
    pts.push_back(pt(0.0, eq_deg(d), t0 + d / speed));
  }
  for (int i = 1; i <= 10; ++i) {
    const double back = kWest * i / 10.0;
    pts.push_back(pt(0.0, eq_deg(kEast - back), t0 + (kEast + back) / speed));
  }
  return make_segment(std::move(pts), "detour_fixture");
}

}  // namespace trajscene::testing
