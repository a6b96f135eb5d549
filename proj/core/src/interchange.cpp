#include "trajscene/interchange.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "trajscene/error.hpp"

namespace trajscene {

using nlohmann::json;

json to_json(const TrajectorySegment& seg) {
  json pts = json::array();
  for (const auto& p : seg.points) pts.push_back({p.lon, p.lat, p.ts});
  return json{{"segment_id", seg.segment_id},
              {"mode", seg.mode ? json(std::string(to_string(*seg.mode))) : json(nullptr)},
              {"points", std::move(pts)}};
}

TrajectorySegment segment_from_json(const json& j) {
  TrajectorySegment seg;
  try {
    seg.segment_id = j.at("segment_id").get<std::string>();
    const auto& mode = j.at("mode");
    if (!mode.is_null()) {
      seg.mode = normalize_mode(mode.get<std::string>());
      if (!seg.mode) throw IntegrityError("unknown mode '" + mode.get<std::string>() + "'");
    }
    for (const auto& p : j.at("points")) {
      if (p.size() != 3) throw IntegrityError("point must be [lon, lat, ts]");
      seg.points.push_back({p[0].get<double>(), p[1].get<double>(), p[2].get<double>()});
    }
  } catch (const json::exception& e) {
    throw IntegrityError(std::string("malformed segment record: ") + e.what());
  }
  validate(seg);
  return seg;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error("write failed: " + path.string());
}

std::vector<json> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<json> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw ParseError(path.filename().string() + ": " + e.what(), line_no);
    }
  }
  return out;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<json>& records) {
  std::string buf;
  for (const auto& r : records) {
    buf += r.dump();
    buf += '\n';
  }
  write_file(path, buf);
}

std::vector<TrajectorySegment> read_segments(const std::filesystem::path& path) {
  std::vector<TrajectorySegment> out;
  for (const auto& j : read_jsonl(path)) out.push_back(segment_from_json(j));
  return out;
}

void write_segments(const std::filesystem::path& path, const std::vector<TrajectorySegment>& segments) {
  std::vector<json> records;
  records.reserve(segments.size());
  for (const auto& s : segments) records.push_back(to_json(s));
  write_jsonl(path, records);
}

}  // namespace trajscene
