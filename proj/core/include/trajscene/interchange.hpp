#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "trajscene/types.hpp"

namespace trajscene {

/// Canonical segment record: {"segment_id", "mode", "points": [[lon, lat, ts], ...]}.
nlohmann::json to_json(const TrajectorySegment& seg);
TrajectorySegment segment_from_json(const nlohmann::json& j);

/// Line-delimited JSON helpers. Readers skip blank lines and report the
/// 1-based line number of malformed records.
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);
void write_jsonl(const std::filesystem::path& path, const std::vector<nlohmann::json>& records);

std::vector<TrajectorySegment> read_segments(const std::filesystem::path& path);
void write_segments(const std::filesystem::path& path, const std::vector<TrajectorySegment>& segments);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace trajscene
