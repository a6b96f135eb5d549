#pragma once

#include "trajscene/types.hpp"

namespace trajscene::geo {

inline constexpr double kEarthRadiusM = 6371000.0;
inline constexpr double kPi = 3.14159265358979323846;

constexpr double deg2rad(double d) { return d * kPi / 180.0; }
constexpr double rad2deg(double r) { return r * 180.0 / kPi; }

/// Great-circle distance on a sphere of radius kEarthRadiusM.
double haversine_m(double lat1, double lon1, double lat2, double lon2);
inline double haversine_m(const GpsPoint& a, const GpsPoint& b) {
  return haversine_m(a.lat, a.lon, b.lat, b.lon);
}

/// Initial great-circle bearing from a to b in degrees, [0, 360).
double initial_bearing_deg(const GpsPoint& a, const GpsPoint& b);

/// Absolute heading change folded into [0, 180].
double heading_change_deg(double bearing_a, double bearing_b);

/// Local east/north offsets in meters of (lat, lon) from an origin, using an
/// equirectangular approximation. Adequate at city scale.
struct LocalXY {
  double x = 0.0;
  double y = 0.0;
};
LocalXY to_local(double origin_lat, double origin_lon, double lat, double lon);

/// Distance in meters from point p to the segment a-b (all lat/lon), computed
/// in the local tangent plane at p.
double point_segment_distance_m(double p_lat, double p_lon, double a_lat, double a_lon,
                                double b_lat, double b_lon);

}  // namespace trajscene::geo
