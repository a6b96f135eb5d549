#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "trajscene/ablation.hpp"
#include "trajscene/config.hpp"
#include "trajscene/manifest.hpp"
#include "trajscene/synth.hpp"

namespace trajscene {

namespace layout {
inline constexpr const char* kSegments = "segments.jsonl";
inline constexpr const char* kFeatures = "features.jsonl";
inline constexpr const char* kScenesDir = "scenes";
inline constexpr const char* kNarratives = "narratives.jsonl";
inline constexpr const char* kEmbeddings = "embeddings.jsonl";
inline constexpr const char* kCombinedDir = "combined";
inline constexpr const char* kModel = "model.ckpt.json";
inline constexpr const char* kEvalJson = "eval.json";
inline constexpr const char* kEvalText = "eval.txt";
inline constexpr const char* kAblationJson = "ablation.json";
inline constexpr const char* kAblationText = "ablation.txt";
inline constexpr const char* kManifest = "manifest.json";
inline constexpr const char* kSynthOsm = "osm.xml";
}  // namespace layout

/// Stage runner bound to one output directory. Each command reads its inputs
/// from files, writes its outputs to files and records both in the manifest.
/// A stage whose config section, input digests and output digests all match
/// the manifest is skipped.
class Pipeline {
 public:
  Pipeline(PipelineConfig cfg, std::filesystem::path out_dir);

  std::filesystem::path ingest(const std::filesystem::path& geolife_root);
  std::filesystem::path features(const std::filesystem::path& segments);
  std::filesystem::path render(const std::filesystem::path& segments);
  std::filesystem::path narrate(const std::filesystem::path& features,
                                const std::filesystem::path& segments);
  std::filesystem::path embed(const std::filesystem::path& segments,
                              const std::filesystem::path& narratives);
  std::vector<std::filesystem::path> combine(const std::filesystem::path& embeddings);
  std::filesystem::path train(const std::filesystem::path& combined);
  EvalReport eval(const std::filesystem::path& model, const std::filesystem::path& combined);
  /// Empty when the stage was skipped; the recorded tables stay on disk.
  std::vector<AblationRow> ablate(const std::filesystem::path& combined_dir);

  /// Full chain: [ingest] -> features -> render -> narrate -> embed -> combine
  /// -> train -> eval [-> ablate].
  EvalReport run_all();

  const RunManifest& manifest() const { return manifest_; }
  const PipelineConfig& config() const { return cfg_; }
  const std::filesystem::path& out_dir() const { return out_dir_; }
  /// Status of each stage run through this object: "ran" or "skipped".
  const std::map<std::string, std::string>& stage_status() const { return status_; }

 private:
  std::filesystem::path segments_file() const;
  std::filesystem::path scenes_dir() const { return out_dir_ / layout::kScenesDir; }
  const osm::Extract& osm_extract();
  bool up_to_date(const std::string& stage, const std::string& cfg_hash,
                  const std::vector<std::filesystem::path>& inputs);
  void record(const std::string& stage, const std::string& cfg_hash,
              const std::vector<std::filesystem::path>& inputs,
              const std::vector<std::filesystem::path>& outputs);
  void warn(const std::string& message);
  void save_manifest();
  std::string relative(const std::filesystem::path& p) const;

  PipelineConfig cfg_;
  std::filesystem::path out_dir_;
  RunManifest manifest_;
  std::map<std::string, std::string> status_;
  std::optional<osm::Extract> osm_;
};

/// Writes segments.jsonl and osm.xml for a synthetic corpus into `out_dir`.
void cmd_synth(const SynthConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace trajscene
