#include "trajscene/manifest.hpp"

#include "trajscene/error.hpp"
#include "trajscene/interchange.hpp"

namespace trajscene {

using nlohmann::json;

json RunManifest::to_json() const {
  json stages_j = json::object();
  for (const auto& [name, s] : stages) {
    stages_j[name] = {{"config_hash", s.config_hash},
                      {"inputs", s.inputs},
                      {"outputs", s.outputs},
                      {"status", s.status}};
  }
  return {{"tool_version", tool_version},
          {"config_hash", config_hash},
          {"stages", stages_j},
          {"segment_counts", segment_counts},
          {"warnings", warnings}};
}

RunManifest RunManifest::from_json(const json& j) {
  RunManifest m;
  try {
    m.tool_version = j.at("tool_version").get<std::string>();
    m.config_hash = j.value("config_hash", "");
    for (const auto& [name, s] : j.at("stages").items()) {
      StageRecord r;
      r.config_hash = s.at("config_hash").get<std::string>();
      r.inputs = s.at("inputs").get<std::map<std::string, std::string>>();
      r.outputs = s.at("outputs").get<std::map<std::string, std::string>>();
      r.status = s.value("status", "");
      m.stages[name] = std::move(r);
    }
    m.segment_counts = j.value("segment_counts", std::map<std::string, long>{});
    m.warnings = j.value("warnings", std::vector<std::string>{});
  } catch (const json::exception& e) {
    throw IntegrityError(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

RunManifest RunManifest::load_or_empty(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) return {};
  return from_json(json::parse(read_file(path)));
}

void RunManifest::save(const std::filesystem::path& path) const {
  write_file(path, to_json().dump(2) + "\n");
}

}  // namespace trajscene
