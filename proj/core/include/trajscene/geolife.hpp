#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "trajscene/types.hpp"

namespace trajscene::geolife {

/// Number of header lines that precede the records of a PLT file.
inline constexpr int kPltHeaderLines = 6;

/// Parses a GeoLife PLT file. Timestamps are read from the date and time
/// columns as UTC; altitude and the day-count column are ignored.
/// Throws ParseError naming the offending line.
std::vector<GpsPoint> parse_plt(std::string_view plt_bytes);

/// Parses a GeoLife labels.txt file (one header line, tab-separated rows).
std::vector<LabelInterval> parse_labels(std::string_view labels_bytes);

/// One PLT record line for `p` (no trailing newline). Altitude is written
/// as the invalid marker -777.
std::string format_plt_record(const GpsPoint& p);

/// A complete PLT document with the standard six-line header.
std::string format_plt(const std::vector<GpsPoint>& points);

}  // namespace trajscene::geolife
