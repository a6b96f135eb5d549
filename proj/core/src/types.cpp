#include "trajscene/types.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "trajscene/error.hpp"

namespace trajscene {

void validate(const GpsPoint& p) {
  if (!(p.lat >= -90.0 && p.lat <= 90.0)) {
    throw IntegrityError("latitude out of range: " + std::to_string(p.lat));
  }
  if (!(p.lon >= -180.0 && p.lon <= 180.0)) {
    throw IntegrityError("longitude out of range: " + std::to_string(p.lon));
  }
  if (!std::isfinite(p.ts) || p.ts < 0.0) {
    throw IntegrityError("timestamp must be finite and non-negative");
  }
}

std::string_view to_string(ModeLabel mode) {
  switch (mode) {
    case ModeLabel::walk: return "walk";
    case ModeLabel::bike: return "bike";
    case ModeLabel::bus: return "bus";
    case ModeLabel::car: return "car";
    case ModeLabel::subway: return "subway";
  }
  return "walk";
}

std::optional<ModeLabel> normalize_mode(std::string_view raw_mode) {
  std::string s;
  s.reserve(raw_mode.size());
  for (char c : raw_mode) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  // Trim surrounding whitespace; labels files occasionally carry a trailing \r.
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  for (ModeLabel m : kAllModes) {
    if (s == to_string(m)) return m;
  }
  return std::nullopt;
}

void validate(const TrajectorySegment& seg) {
  if (seg.points.size() < 2) {
    throw IntegrityError("segment " + seg.segment_id + " has fewer than 2 points");
  }
  for (std::size_t i = 0; i < seg.points.size(); ++i) {
    validate(seg.points[i]);
    if (i > 0 && !(seg.points[i].ts > seg.points[i - 1].ts)) {
      throw IntegrityError("segment " + seg.segment_id + ": timestamps not strictly increasing at point " +
                           std::to_string(i));
    }
  }
}

}  // namespace trajscene
