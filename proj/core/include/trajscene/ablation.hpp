#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "trajscene/embedding.hpp"
#include "trajscene/metrics.hpp"
#include "trajscene/mlp.hpp"

namespace trajscene {

/// Combined embeddings for each ablation variant.
using EmbeddingStore = std::map<CombineRule, std::vector<SceneEmbedding>>;

/// Labeled vectors of one variant. Throws Error on unlabeled records, mixed
/// lengths or mixed combine rules.
std::vector<LabeledVector> to_dataset(const std::vector<SceneEmbedding>& records);

struct ModelRun {
  TrainResult trained;
  EvalReport report;
  std::vector<std::string> test_ids;
  std::size_t input_dim = 0;
};

/// Split, train on train/val, evaluate on test.
ModelRun train_and_evaluate(const std::vector<LabeledVector>& data, const TrainConfig& cfg);

struct AblationRow {
  CombineRule rule = CombineRule::concatenation;
  std::size_t input_dim = 0;
  EvalReport report;
  std::vector<std::string> test_ids;
};

/// One model per variant on identical splits. Throws IntegrityError naming a
/// segment that is present in one variant but missing from another.
std::vector<AblationRow> run_ablation(const EmbeddingStore& store, const TrainConfig& cfg);

nlohmann::json to_json(const std::vector<AblationRow>& rows);
std::string format_ablation_table(const std::vector<AblationRow>& rows);

}  // namespace trajscene
