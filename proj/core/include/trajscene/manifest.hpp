#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace trajscene {

inline constexpr const char* kToolVersion = "trajscene 0.3.0";

struct StageRecord {
  std::string config_hash;
  std::map<std::string, std::string> inputs;   // path -> sha256
  std::map<std::string, std::string> outputs;  // path relative to the run dir -> sha256
  std::string status;                          // ran | skipped
};

/// Per-run record of the configuration and every stage's file digests.
struct RunManifest {
  std::string tool_version = kToolVersion;
  std::string config_hash;
  std::map<std::string, StageRecord> stages;
  std::map<std::string, long> segment_counts;
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
  static RunManifest load_or_empty(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

}  // namespace trajscene
