#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "trajscene/embedding.hpp"
#include "trajscene/kinematics.hpp"
#include "trajscene/mlp.hpp"
#include "trajscene/narrative.hpp"
#include "trajscene/preprocess.hpp"
#include "trajscene/remote.hpp"
#include "trajscene/scene.hpp"

namespace trajscene {

struct PathsConfig {
  std::string geolife_root;  // Data/<user>/{Trajectory/*.plt,labels.txt}
  std::string segments;      // pre-built segment file; ingest runs when empty
  std::string osm;           // OSM XML extract
  std::string out_dir = "out";
};

struct RenderConfig {
  RenderStyle style;
  double buffer_frac = 0.2;
  bool raster = false;
};

struct NarrativeConfig {
  std::string source = "deterministic";  // deterministic | remote
  SpeedBands bands;
  std::size_t point_cap = 2000;
  remote::EndpointConfig endpoint;
};

struct EmbeddingConfig {
  std::string embedder = "offline";  // offline | remote
  std::size_t dim = 256;
  std::uint64_t seed = 1;
  remote::EndpointConfig endpoint;
};

/// Everything a pipeline run depends on. Loaded from JSON; unknown keys are
/// rejected so typos fail before any work starts.
struct PipelineConfig {
  PathsConfig paths;
  CleaningConfig cleaning;
  KinematicsConfig kinematics;
  RenderConfig render;
  NarrativeConfig narrative;
  EmbeddingConfig embedding;
  TrainConfig train;
  CombineRule rule = CombineRule::concatenation;
  bool ablation = true;

  /// Validates numeric fields; with `check_paths`, also that referenced inputs
  /// exist and that remote tokens are present in the environment.
  void validate(bool check_paths) const;

  /// Applies a global --seed override to the embedding and training seeds.
  void apply_seed(std::uint64_t seed);
};

PipelineConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PipelineConfig& cfg);
PipelineConfig load_config(const std::filesystem::path& path);

/// SHA-256 of the canonical JSON dump.
std::string json_hash(const nlohmann::json& j);

}  // namespace trajscene
