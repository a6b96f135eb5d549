#pragma once

#include <nlohmann/json.hpp>

#include "trajscene/embedding.hpp"
#include "trajscene/kinematics.hpp"
#include "trajscene/narrative.hpp"
#include "trajscene/scene.hpp"

// JSON codecs for the line-delimited stage files. Field names are documented
// in docs/formats.md.
namespace trajscene {

nlohmann::json to_json(const KinematicsReport& r);
KinematicsReport report_from_json(const nlohmann::json& j);

nlohmann::json to_json(const SceneText& t);
SceneText scene_text_from_json(const nlohmann::json& j);

nlohmann::json to_json(const SceneSidecar& s);
SceneSidecar sidecar_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ModalityEmbedding& e);
ModalityEmbedding modality_embedding_from_json(const nlohmann::json& j);

nlohmann::json to_json(const SceneEmbedding& e);
SceneEmbedding scene_embedding_from_json(const nlohmann::json& j);

}  // namespace trajscene
