#include "trajscene/geolife.hpp"

#include <charconv>
#include <cmath>
#include <string>
#include <system_error>

#include <fmt/format.h>

#include "trajscene/civil_time.hpp"
#include "trajscene/error.hpp"

namespace trajscene::geolife {
namespace {

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    pos = nl + 1;
  }
  return lines;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  for (;;) {
    std::size_t next = line.find(sep, pos);
    if (next == std::string_view::npos) {
      out.push_back(line.substr(pos));
      return out;
    }
    out.push_back(line.substr(pos, next - pos));
    pos = next + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(out);
}

bool parse_int(std::string_view s, int& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size() && !s.empty();
}

// Parses "<date><date_sep>...<space or comma>HH:MM:SS" given the date and time parts.
bool parse_date_time(std::string_view date, char date_sep, std::string_view time, double& ts) {
  auto d = split(trim(date), date_sep);
  auto t = split(trim(time), ':');
  if (d.size() != 3 || t.size() != 3) return false;
  int y, mo, da, h, mi;
  double s;
  if (!parse_int(d[0], y) || !parse_int(d[1], mo) || !parse_int(d[2], da) || !parse_int(t[0], h) ||
      !parse_int(t[1], mi) || !parse_double(t[2], s)) {
    return false;
  }
  if (mo < 1 || da < 1) return false;
  return utc_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(da), h, mi, s, ts);
}

bool blank(std::string_view line) { return trim(line).empty(); }

}  // namespace

std::vector<GpsPoint> parse_plt(std::string_view plt_bytes) {
  const auto lines = split_lines(plt_bytes);
  if (lines.size() < static_cast<std::size_t>(kPltHeaderLines)) {
    throw ParseError("PLT format error: expected " + std::to_string(kPltHeaderLines) +
                         " header lines, found " + std::to_string(lines.size()),
                     0);
  }
  std::vector<GpsPoint> points;
  points.reserve(lines.size() - kPltHeaderLines);
  for (std::size_t i = kPltHeaderLines; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    if (blank(lines[i])) continue;
    const auto fields = split(lines[i], ',');
    if (fields.size() < 7) {
      throw ParseError("expected 7 fields, found " + std::to_string(fields.size()), line_no);
    }
    GpsPoint p;
    if (!parse_double(fields[0], p.lat) || !parse_double(fields[1], p.lon)) {
      throw ParseError("unparsable latitude/longitude", line_no);
    }
    if (p.lat < -90.0 || p.lat > 90.0 || p.lon < -180.0 || p.lon > 180.0) {
      throw ParseError("latitude/longitude out of range", line_no);
    }
    double unused;
    if (!parse_double(fields[3], unused) || !parse_double(fields[4], unused)) {
      throw ParseError("unparsable altitude or day count", line_no);
    }
    if (!parse_date_time(fields[5], '-', fields[6], p.ts) || p.ts < 0.0) {
      throw ParseError("unparsable date/time", line_no);
    }
    points.push_back(p);
  }
  return points;
}

std::vector<LabelInterval> parse_labels(std::string_view labels_bytes) {
  const auto lines = split_lines(labels_bytes);
  if (lines.empty()) throw ParseError("labels file is missing its header line", 0);
  std::vector<LabelInterval> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    if (blank(lines[i])) continue;
    const auto fields = split(lines[i], '\t');
    if (fields.size() < 3) {
      throw ParseError("expected 3 tab-separated fields", line_no);
    }
    auto parse_stamp = [&](std::string_view field, double& ts) {
      field = trim(field);
      const auto sp = field.find(' ');
      if (sp == std::string_view::npos ||
          !parse_date_time(field.substr(0, sp), '/', field.substr(sp + 1), ts)) {
        throw ParseError("unparsable timestamp '" + std::string(field) + "'", line_no);
      }
    };
    LabelInterval iv;
    parse_stamp(fields[0], iv.start_ts);
    parse_stamp(fields[1], iv.end_ts);
    iv.raw_mode = std::string(trim(fields[2]));
    if (!(iv.start_ts < iv.end_ts)) {
      throw ParseError("interval ends before it starts", line_no);
    }
    out.push_back(std::move(iv));
  }
  return out;
}

std::string format_plt_record(const GpsPoint& p) {
  const CivilTime t = civil_from_utc(p.ts);
  // Day count since 1899-12-30; 25569 days separate it from the Unix epoch.
  const double days = p.ts / 86400.0 + 25569.0;
  return fmt::format("{},{},0,-777,{:.10f},{:04d}-{:02d}-{:02d},{:02d}:{:02d}:{:02d}", p.lat, p.lon,
                     days, t.year, t.month, t.day, t.hour, t.minute,
                     static_cast<int>(std::floor(t.second)));
}

std::string format_plt(const std::vector<GpsPoint>& points) {
  std::string out =
      "Geolife trajectory\nWGS 84\nAltitude is in Feet\nReserved 3\n"
      "0,2,255,My Track,0,0,2,8421376\n0\n";
  for (const auto& p : points) {
    out += format_plt_record(p);
    out += '\n';
  }
  return out;
}

}  // namespace trajscene::geolife
