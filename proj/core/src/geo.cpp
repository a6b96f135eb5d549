#include "trajscene/geo.hpp"

#include <algorithm>
#include <cmath>

namespace trajscene::geo {

double haversine_m(double lat1, double lon1, double lat2, double lon2) {
  const double phi1 = deg2rad(lat1);
  const double phi2 = deg2rad(lat2);
  const double dphi = phi2 - phi1;
  const double dlambda = deg2rad(lon2 - lon1);
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlambda / 2.0);
  const double a = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(a)));
}

double initial_bearing_deg(const GpsPoint& a, const GpsPoint& b) {
  const double phi1 = deg2rad(a.lat);
  const double phi2 = deg2rad(b.lat);
  const double dlambda = deg2rad(b.lon - a.lon);
  const double y = std::sin(dlambda) * std::cos(phi2);
  const double x = std::cos(phi1) * std::sin(phi2) - std::sin(phi1) * std::cos(phi2) * std::cos(dlambda);
  double deg = rad2deg(std::atan2(y, x));
  if (deg < 0.0) deg += 360.0;
  return deg >= 360.0 ? deg - 360.0 : deg;
}

double heading_change_deg(double bearing_a, double bearing_b) {
  double d = std::fmod(std::fabs(bearing_b - bearing_a), 360.0);
  return d > 180.0 ? 360.0 - d : d;
}

LocalXY to_local(double origin_lat, double origin_lon, double lat, double lon) {
  const double k = kEarthRadiusM * kPi / 180.0;
  return {(lon - origin_lon) * k * std::cos(deg2rad(origin_lat)), (lat - origin_lat) * k};
}

double point_segment_distance_m(double p_lat, double p_lon, double a_lat, double a_lon,
                                double b_lat, double b_lon) {
  const LocalXY a = to_local(p_lat, p_lon, a_lat, a_lon);
  const LocalXY b = to_local(p_lat, p_lon, b_lat, b_lon);
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp(-(a.x * dx + a.y * dy) / len2, 0.0, 1.0);
  const double cx = a.x + t * dx;
  const double cy = a.y + t * dy;
  return std::hypot(cx, cy);
}

}  // namespace trajscene::geo
