#include "trajscene/ablation.hpp"

#include <set>

#include <nlohmann/json.hpp>

#include "trajscene/error.hpp"

namespace trajscene {

std::vector<LabeledVector> to_dataset(const std::vector<SceneEmbedding>& records) {
  std::vector<LabeledVector> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    if (!r.mode_label) throw Error("segment " + r.segment_id + " has no mode label");
    if (!records.empty() && r.combine_rule != records.front().combine_rule) {
      throw Error("dataset mixes combine rules");
    }
    if (r.combined.size() != records.front().combined.size()) {
      throw Error("mixed embedding lengths at segment " + r.segment_id);
    }
    out.push_back({r.segment_id, r.combined, *r.mode_label});
  }
  return out;
}

ModelRun train_and_evaluate(const std::vector<LabeledVector>& data, const TrainConfig& cfg) {
  cfg.validate();
  const DataSplit split = stratified_split(data, cfg);
  auto gather = [&](const std::vector<std::size_t>& idx) {
    std::vector<LabeledVector> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(data[i]);
    return out;
  };
  const auto test = gather(split.test);
  if (test.empty()) throw Error("split produced an empty test set");
  ModelRun run;
  run.trained = train(gather(split.train), gather(split.val), cfg);
  run.report = evaluate(run.trained.model, test);
  for (const auto& s : test) run.test_ids.push_back(s.id);
  run.input_dim = data.front().x.size();
  return run;
}

std::vector<AblationRow> run_ablation(const EmbeddingStore& store, const TrainConfig& cfg) {
  for (CombineRule rule : kAllRules) {
    if (!store.count(rule)) throw IntegrityError("embedding store lacks the " + std::string(to_string(rule)) + " variant");
  }
  std::map<CombineRule, std::set<std::string>> ids;
  for (const auto& [rule, records] : store) {
    for (const auto& r : records) ids[rule].insert(r.segment_id);
  }
  for (const auto& [rule_a, set_a] : ids) {
    for (const auto& [rule_b, set_b] : ids) {
      for (const auto& id : set_a) {
        if (!set_b.count(id)) {
          throw IntegrityError("segment " + id + " is present in " + std::string(to_string(rule_a)) +
                               " but missing from " + std::string(to_string(rule_b)));
        }
      }
    }
  }
  std::vector<AblationRow> rows;
  for (CombineRule rule : {CombineRule::image_only, CombineRule::text_only, CombineRule::fusion,
                           CombineRule::concatenation}) {
    const ModelRun run = train_and_evaluate(to_dataset(store.at(rule)), cfg);
    rows.push_back({rule, run.input_dim, run.report, run.test_ids});
  }
  return rows;
}

nlohmann::json to_json(const std::vector<AblationRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    out.push_back({{"combine_rule", std::string(to_string(r.rule))},
                   {"input_dim", r.input_dim},
                   {"report", to_json(r.report)},
                   {"test_ids", r.test_ids}});
  }
  return out;
}

std::string format_ablation_table(const std::vector<AblationRow>& rows) {
  std::vector<std::pair<std::string, EvalReport>> named;
  for (const auto& r : rows) {
    std::string name;
    switch (r.rule) {
      case CombineRule::image_only: name = "Ours(w/o. text)"; break;
      case CombineRule::text_only: name = "Ours(w/o. image)"; break;
      case CombineRule::fusion: name = "Ours(fusion)"; break;
      case CombineRule::concatenation: name = "Ours(concatenation)"; break;
    }
    named.emplace_back(name + " [d=" + std::to_string(r.input_dim) + "]", r.report);
  }
  return format_table(named);
}

}  // namespace trajscene
