#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace trajscene {

/// One GPS fix. `ts` is seconds since the Unix epoch, UTC.
struct GpsPoint {
  double lon = 0.0;
  double lat = 0.0;
  double ts = 0.0;

  friend bool operator==(const GpsPoint&, const GpsPoint&) = default;
};

/// Throws IntegrityError if the coordinates or timestamp are out of range.
void validate(const GpsPoint& p);

enum class ModeLabel { walk = 0, bike, bus, car, subway };

inline constexpr std::size_t kModeCount = 5;
inline constexpr std::array<ModeLabel, kModeCount> kAllModes{
    ModeLabel::walk, ModeLabel::bike, ModeLabel::bus, ModeLabel::car, ModeLabel::subway};

std::string_view to_string(ModeLabel mode);

/// Case-insensitive mapping onto the five supported modes. Anything else
/// (train, taxi, airplane, ...) maps to nullopt.
std::optional<ModeLabel> normalize_mode(std::string_view raw_mode);

/// A chronologically ordered run of at least two fixes.
struct TrajectorySegment {
  std::string segment_id;
  std::vector<GpsPoint> points;
  std::optional<ModeLabel> mode;

  double start_ts() const { return points.front().ts; }
  double end_ts() const { return points.back().ts; }
  double duration_s() const { return points.back().ts - points.front().ts; }
};

/// Throws IntegrityError unless k >= 2, every point is valid and timestamps
/// strictly increase.
void validate(const TrajectorySegment& seg);

struct LabelInterval {
  double start_ts = 0.0;
  double end_ts = 0.0;
  std::string raw_mode;
};

}  // namespace trajscene
