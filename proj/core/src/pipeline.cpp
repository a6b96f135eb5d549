#include "trajscene/pipeline.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "trajscene/digest.hpp"
#include "trajscene/error.hpp"
#include "trajscene/geolife.hpp"
#include "trajscene/interchange.hpp"
#include "trajscene/records.hpp"

namespace trajscene {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Runs `fn`, converting any failure that is not already stage-tagged.
template <typename Fn>
auto in_stage(const std::string& stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, "", e.what());
  }
}

/// Runs `fn` for one segment, tagging failures with its id.
template <typename Fn>
auto for_segment(const std::string& stage, const std::string& segment_id, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, segment_id, e.what());
  }
}

std::string stage_hash(const json& section) {
  return json_hash(json{{"tool_version", kToolVersion}, {"section", section}});
}

json cleaning_json(const CleaningConfig& c) {
  return {{"max_speed_mps", c.max_speed_mps},
          {"max_gap_s", c.max_gap_s},
          {"min_points", c.min_points},
          {"min_duration_s", c.min_duration_s}};
}

template <typename T, typename Decode>
std::vector<T> read_records(const fs::path& path, Decode decode) {
  std::vector<T> out;
  for (const auto& j : read_jsonl(path)) out.push_back(decode(j));
  return out;
}

template <typename T>
void write_records(const fs::path& path, const std::vector<T>& records) {
  std::vector<json> lines;
  lines.reserve(records.size());
  for (const auto& r : records) lines.push_back(to_json(r));
  write_jsonl(path, lines);
}

fs::path data_dir(const fs::path& root) {
  if (fs::is_directory(root / "Data")) return root / "Data";
  return root;
}

std::vector<fs::path> sorted_entries(const fs::path& dir, bool directories) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (directories ? e.is_directory() : e.is_regular_file()) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

Pipeline::Pipeline(PipelineConfig cfg, fs::path out_dir) : cfg_(std::move(cfg)), out_dir_(std::move(out_dir)) {
  fs::create_directories(out_dir_);
  manifest_ = RunManifest::load_or_empty(out_dir_ / layout::kManifest);
  manifest_.tool_version = kToolVersion;
  manifest_.config_hash = json_hash(to_json(cfg_));
}

fs::path Pipeline::segments_file() const {
  if (!cfg_.paths.segments.empty()) return cfg_.paths.segments;
  return out_dir_ / layout::kSegments;
}

const osm::Extract& Pipeline::osm_extract() {
  if (!osm_) {
    if (cfg_.paths.osm.empty()) {
      warn("no OSM extract configured; scenes contain the trajectory only");
      osm_.emplace();
    } else {
      osm_ = osm::parse_osm_xml(read_file(cfg_.paths.osm));
    }
  }
  return *osm_;
}

std::string Pipeline::relative(const fs::path& p) const {
  const auto rel = p.lexically_relative(out_dir_);
  if (!rel.empty() && *rel.begin() != "..") return rel.generic_string();
  return p.generic_string();
}

bool Pipeline::up_to_date(const std::string& stage, const std::string& cfg_hash,
                          const std::vector<fs::path>& inputs) {
  const auto it = manifest_.stages.find(stage);
  if (it == manifest_.stages.end()) return false;
  const StageRecord& rec = it->second;
  if (rec.config_hash != cfg_hash || rec.inputs.size() != inputs.size() || rec.outputs.empty()) return false;
  for (const auto& in : inputs) {
    const auto found = rec.inputs.find(relative(in));
    if (found == rec.inputs.end() || !fs::exists(in) || file_sha256(in) != found->second) return false;
  }
  for (const auto& [name, digest] : rec.outputs) {
    const fs::path p = fs::path(name).is_absolute() ? fs::path(name) : out_dir_ / name;
    if (!fs::exists(p) || file_sha256(p) != digest) return false;
  }
  manifest_.stages[stage].status = "skipped";
  status_[stage] = "skipped";
  save_manifest();
  return true;
}

void Pipeline::record(const std::string& stage, const std::string& cfg_hash, const std::vector<fs::path>& inputs,
                      const std::vector<fs::path>& outputs) {
  StageRecord rec;
  rec.config_hash = cfg_hash;
  for (const auto& in : inputs) rec.inputs[relative(in)] = file_sha256(in);
  for (const auto& out : outputs) rec.outputs[relative(out)] = file_sha256(out);
  rec.status = "ran";
  manifest_.stages[stage] = std::move(rec);
  status_[stage] = "ran";
  save_manifest();
}

void Pipeline::warn(const std::string& message) {
  if (std::find(manifest_.warnings.begin(), manifest_.warnings.end(), message) == manifest_.warnings.end()) {
    manifest_.warnings.push_back(message);
  }
}

void Pipeline::save_manifest() { manifest_.save(out_dir_ / layout::kManifest); }

fs::path Pipeline::ingest(const fs::path& geolife_root) {
  static const std::string kStage = "ingest";
  return in_stage(kStage, [&] {
    if (!fs::is_directory(geolife_root)) throw ConfigError("GeoLife root not found: " + geolife_root.string());
    const fs::path data = data_dir(geolife_root);

    std::vector<fs::path> inputs;
    std::vector<fs::path> users;
    for (const auto& user : sorted_entries(data, true)) {
      if (!fs::is_regular_file(user / "labels.txt")) {
        warn("user " + user.filename().string() + " has no labels.txt; skipped");
        continue;
      }
      users.push_back(user);
      inputs.push_back(user / "labels.txt");
      if (fs::is_directory(user / "Trajectory")) {
        for (const auto& plt : sorted_entries(user / "Trajectory", false)) {
          if (plt.extension() == ".plt") inputs.push_back(plt);
        }
      }
    }
    if (users.empty()) throw IntegrityError("no labeled users under " + data.string());

    const fs::path out = out_dir_ / layout::kSegments;
    const std::string hash = stage_hash(cleaning_json(cfg_.cleaning));
    if (up_to_date(kStage, hash, inputs)) return out;

    std::vector<TrajectorySegment> segments;
    for (const auto& user : users) {
      const std::string name = user.filename().string();
      std::vector<LabelInterval> labels;
      try {
        labels = geolife::parse_labels(read_file(user / "labels.txt"));
      } catch (const ParseError& e) {
        throw StageError(kStage, "", (user / "labels.txt").string() + ": " + e.what());
      }
      std::vector<GpsPoint> points;
      if (fs::is_directory(user / "Trajectory")) {
        for (const auto& plt : sorted_entries(user / "Trajectory", false)) {
          if (plt.extension() != ".plt") continue;
          try {
            const auto parsed = geolife::parse_plt(read_file(plt));
            points.insert(points.end(), parsed.begin(), parsed.end());
          } catch (const ParseError& e) {
            throw StageError(kStage, "", plt.string() + ": " + e.what());
          }
        }
      }
      std::stable_sort(points.begin(), points.end(),
                       [](const GpsPoint& a, const GpsPoint& b) { return a.ts < b.ts; });
      const auto cleaned = clean(points, cfg_.cleaning);
      auto segs = segment_by_labels(cleaned, labels, cfg_.cleaning, name);
      segments.insert(segments.end(), std::make_move_iterator(segs.begin()), std::make_move_iterator(segs.end()));
    }
    write_segments(out, segments);

    manifest_.segment_counts.clear();
    for (ModeLabel m : kAllModes) manifest_.segment_counts[std::string(to_string(m))] = 0;
    for (const auto& s : segments) {
      if (s.mode) ++manifest_.segment_counts[std::string(to_string(*s.mode))];
    }
    record(kStage, hash, inputs, {out});
    return out;
  });
}

fs::path Pipeline::features(const fs::path& segments_path) {
  static const std::string kStage = "features";
  return in_stage(kStage, [&] {
    const fs::path out = out_dir_ / layout::kFeatures;
    const auto k = cfg_.kinematics;
    const std::string hash = stage_hash({{"stationary_speed_mps", k.stationary_speed_mps},
                                         {"brief_min_s", k.brief_min_s},
                                         {"brief_max_s", k.brief_max_s},
                                         {"prolonged_min_s", k.prolonged_min_s},
                                         {"sharp_turn_deg", k.sharp_turn_deg},
                                         {"min_leg_m", k.min_leg_m},
                                         {"local_utc_offset_h", k.local_utc_offset_h}});
    if (up_to_date(kStage, hash, {segments_path})) return out;

    const auto segments = read_segments(segments_path);
    if (manifest_.segment_counts.empty()) {
      for (ModeLabel m : kAllModes) manifest_.segment_counts[std::string(to_string(m))] = 0;
      for (const auto& s : segments) {
        if (s.mode) ++manifest_.segment_counts[std::string(to_string(*s.mode))];
      }
    }
    std::vector<KinematicsReport> reports;
    reports.reserve(segments.size());
    for (const auto& seg : segments) {
      reports.push_back(for_segment(kStage, seg.segment_id, [&] { return analyze(seg, cfg_.kinematics); }));
    }
    write_records(out, reports);
    record(kStage, hash, {segments_path}, {out});
    return out;
  });
}

fs::path Pipeline::render(const fs::path& segments_path) {
  static const std::string kStage = "render";
  return in_stage(kStage, [&] {
    const fs::path dir = scenes_dir();
    std::vector<fs::path> inputs{segments_path};
    if (!cfg_.paths.osm.empty()) inputs.emplace_back(cfg_.paths.osm);
    const json section = to_json(cfg_).at("render");
    const std::string hash = stage_hash(section);
    if (up_to_date(kStage, hash, inputs)) return dir;

    const auto segments = read_segments(segments_path);
    const osm::Extract& osm = osm_extract();
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::vector<fs::path> outputs;
    for (const auto& seg : segments) {
      for_segment(kStage, seg.segment_id, [&] {
        const BBox box = scene_bbox(seg, cfg_.render.buffer_frac);
        const SceneLayers layers = extract_layers(osm, box);
        const SceneImage img = render_scene(seg, layers, box, cfg_.render.style, cfg_.render.raster);
        const fs::path base = dir / seg.segment_id;
        const fs::path svg = fs::path(base.string() + ".scene.svg");
        const fs::path side = fs::path(base.string() + ".scene.json");
        write_file(svg, img.vector_doc);
        const SceneSidecar sidecar{seg.segment_id, img.bbox, img.style_version, img.width_px, img.height_px,
                                   img.trajectory_px_length};
        write_file(side, to_json(sidecar).dump() + "\n");
        outputs.push_back(svg);
        outputs.push_back(side);
        if (img.raster) {
          const fs::path png = fs::path(base.string() + ".scene.png");
          write_file(png, encode_png(*img.raster));
          outputs.push_back(png);
        }
      });
    }
    record(kStage, hash, inputs, outputs);
    return dir;
  });
}

fs::path Pipeline::narrate(const fs::path& features_path, const fs::path& segments_path) {
  static const std::string kStage = "narrate";
  return in_stage(kStage, [&] {
    const fs::path out = out_dir_ / layout::kNarratives;
    const json cfg_json = to_json(cfg_);
    const std::string hash = stage_hash({{"narrative", cfg_json.at("narrative")},
                                         {"local_utc_offset_h", cfg_.kinematics.local_utc_offset_h}});
    if (up_to_date(kStage, hash, {features_path, segments_path})) return out;

    const auto reports = read_records<KinematicsReport>(features_path, report_from_json);
    std::vector<SceneText> texts;
    if (cfg_.narrative.source == "deterministic") {
      for (const auto& r : reports) {
        texts.push_back(for_segment(kStage, r.segment_id, [&] {
          return render_narrative(r, cfg_.narrative.bands, cfg_.kinematics.local_utc_offset_h);
        }));
      }
    } else {
      const auto segments = read_segments(segments_path);
      const auto& ep = cfg_.narrative.endpoint;
      HttpReasonerClient client(ep);
      remote::RequestGate gate(ep.max_in_flight, ep.requests_per_minute);
      texts = remote::run_gated<SceneText>(
          segments.size(),
          [&](std::size_t i) {
            return for_segment(kStage, segments[i].segment_id, [&] {
              SceneText t = remote_narrative(build_prompt(segments[i], cfg_.narrative.point_cap), client,
                                             ep.retries, ep.backoff_s);
              t.segment_id = segments[i].segment_id;
              return t;
            });
          },
          gate, ep.max_in_flight);
      for (const auto& t : texts) {
        if (t.degraded) warn("narrative for " + t.segment_id + " lacks the expected sections; kept raw text");
      }
    }
    write_records(out, texts);
    record(kStage, hash, {features_path, segments_path}, {out});
    return out;
  });
}

fs::path Pipeline::embed(const fs::path& segments_path, const fs::path& narratives_path) {
  static const std::string kStage = "embed";
  return in_stage(kStage, [&] {
    const fs::path out = out_dir_ / layout::kEmbeddings;
    const auto segments = read_segments(segments_path);
    std::vector<fs::path> inputs{segments_path, narratives_path};
    if (!cfg_.paths.osm.empty()) inputs.emplace_back(cfg_.paths.osm);
    const bool remote_embedder = cfg_.embedding.embedder == "remote";
    for (const auto& seg : segments) {
      inputs.push_back(scenes_dir() / (seg.segment_id + (remote_embedder ? ".scene.png" : ".scene.json")));
    }
    const std::string hash = stage_hash(to_json(cfg_).at("embedding"));
    if (up_to_date(kStage, hash, inputs)) return out;

    const auto texts = read_records<SceneText>(narratives_path, scene_text_from_json);
    std::map<std::string, const SceneText*> text_by_id;
    for (const auto& t : texts) text_by_id[t.segment_id] = &t;
    auto text_of = [&](const std::string& id) -> const SceneText& {
      const auto it = text_by_id.find(id);
      if (it == text_by_id.end()) throw IntegrityError("no narrative for segment " + id);
      return *it->second;
    };

    std::vector<ModalityEmbedding> records;
    const std::size_t dim = cfg_.embedding.dim;
    if (!remote_embedder) {
      const osm::Extract& osm = osm_extract();
      for (const auto& seg : segments) {
        for_segment(kStage, seg.segment_id, [&] {
          const fs::path side = scenes_dir() / (seg.segment_id + ".scene.json");
          const SceneSidecar sidecar = sidecar_from_json(json::parse(read_file(side)));
          const SceneLayers layers = extract_layers(osm, sidecar.bbox);
          records.push_back(embed_image_offline(seg, sidecar, layers, dim, cfg_.embedding.seed));
          records.push_back(embed_text_offline(text_of(seg.segment_id), dim, cfg_.embedding.seed));
        });
      }
    } else {
      const auto& ep = cfg_.embedding.endpoint;
      HttpEmbedClient client(ep);
      remote::RequestGate gate(ep.max_in_flight, ep.requests_per_minute);
      const std::size_t n = segments.size();
      auto results = remote::run_gated<ModalityEmbedding>(
          2 * n,
          [&](std::size_t k) {
            const auto& seg = segments[k / 2];
            return for_segment(kStage, seg.segment_id, [&] {
              EmbedRequest req;
              if (k % 2 == 0) {
                req.modality = Modality::image;
                req.payload = read_file(scenes_dir() / (seg.segment_id + ".scene.png"));
              } else {
                req.modality = Modality::text;
                req.payload = text_of(seg.segment_id).full_text;
              }
              return embed_remote(seg.segment_id, req, client, dim, ep.retries, ep.backoff_s).embedding;
            });
          },
          gate, ep.max_in_flight);
      records = std::move(results);
    }
    write_records(out, records);
    record(kStage, hash, inputs, {out});
    return out;
  });
}

std::vector<fs::path> Pipeline::combine(const fs::path& embeddings_path) {
  static const std::string kStage = "combine";
  return in_stage(kStage, [&] {
    const fs::path dir = out_dir_ / layout::kCombinedDir;
    std::vector<fs::path> outputs;
    for (CombineRule rule : kAllRules) outputs.push_back(dir / (std::string(to_string(rule)) + ".jsonl"));
    const fs::path segments_path = segments_file();
    const std::string hash = stage_hash({{"rules", "all"}});
    if (up_to_date(kStage, hash, {embeddings_path, segments_path})) return outputs;

    std::map<std::string, std::optional<ModeLabel>> modes;
    std::vector<std::string> order;
    for (const auto& seg : read_segments(segments_path)) {
      modes[seg.segment_id] = seg.mode;
      order.push_back(seg.segment_id);
    }
    std::map<std::string, std::pair<std::optional<ModalityEmbedding>, std::optional<ModalityEmbedding>>> by_id;
    for (auto& e : read_records<ModalityEmbedding>(embeddings_path, modality_embedding_from_json)) {
      auto& slot = by_id[e.segment_id];
      (e.modality == Modality::image ? slot.first : slot.second) = std::move(e);
    }

    fs::create_directories(dir);
    for (std::size_t r = 0; r < kAllRules.size(); ++r) {
      std::vector<SceneEmbedding> combined;
      for (const auto& id : order) {
        const auto it = by_id.find(id);
        if (it == by_id.end()) throw StageError(kStage, id, "segment has no embeddings");
        combined.push_back(for_segment(kStage, id, [&] {
          SceneEmbedding e = trajscene::combine(it->second.first, it->second.second, kAllRules[r]);
          e.mode_label = modes[id];
          return e;
        }));
      }
      write_records(outputs[r], combined);
    }
    record(kStage, hash, {embeddings_path, segments_path}, outputs);
    return outputs;
  });
}

fs::path Pipeline::train(const fs::path& combined_path) {
  static const std::string kStage = "train";
  return in_stage(kStage, [&] {
    const fs::path out = out_dir_ / layout::kModel;
    const std::string hash = stage_hash(to_json(cfg_).at("train"));
    if (up_to_date(kStage, hash, {combined_path})) return out;

    const auto records = read_records<SceneEmbedding>(combined_path, scene_embedding_from_json);
    const auto data = to_dataset(records);
    const DataSplit split = stratified_split(data, cfg_.train);
    std::vector<LabeledVector> train_set;
    std::vector<LabeledVector> val_set;
    for (auto i : split.train) train_set.push_back(data[i]);
    for (auto i : split.val) val_set.push_back(data[i]);
    const TrainResult result = trajscene::train(train_set, val_set, cfg_.train);
    write_file(out, serialize_model(result.model, cfg_.train));
    record(kStage, hash, {combined_path}, {out});
    return out;
  });
}

EvalReport Pipeline::eval(const fs::path& model_path, const fs::path& combined_path) {
  static const std::string kStage = "eval";
  return in_stage(kStage, [&] {
    const fs::path out_json = out_dir_ / layout::kEvalJson;
    const fs::path out_text = out_dir_ / layout::kEvalText;
    const std::string hash = stage_hash(to_json(cfg_).at("train"));

    const auto records = read_records<SceneEmbedding>(combined_path, scene_embedding_from_json);
    const auto data = to_dataset(records);
    const DataSplit split = stratified_split(data, cfg_.train);
    std::vector<LabeledVector> test_set;
    for (auto i : split.test) test_set.push_back(data[i]);
    const MlpModel model = deserialize_model(read_file(model_path));
    if (!data.empty() && static_cast<std::size_t>(model.input_dim()) != data.front().x.size()) {
      throw IntegrityError(fmt::format("model expects {} inputs but embeddings have {}", model.input_dim(),
                                       data.front().x.size()));
    }
    const EvalReport report = evaluate(model, test_set);
    if (up_to_date(kStage, hash, {model_path, combined_path})) return report;

    const std::string rule = records.empty() ? "model" : std::string(to_string(records.front().combine_rule));
    json j = to_json(report);
    j["combine_rule"] = rule;
    j["test_size"] = test_set.size();
    write_file(out_json, j.dump(2) + "\n");
    write_file(out_text, format_table({{rule, report}}));
    for (const auto& cls : report.absent_classes) warn("class " + std::string(to_string(cls)) + " is absent from the test split");
    record(kStage, hash, {model_path, combined_path}, {out_json, out_text});
    return report;
  });
}

std::vector<AblationRow> Pipeline::ablate(const fs::path& combined_dir) {
  static const std::string kStage = "ablate";
  return in_stage(kStage, [&] {
    std::vector<fs::path> inputs;
    EmbeddingStore store;
    for (CombineRule rule : kAllRules) {
      const fs::path p = combined_dir / (std::string(to_string(rule)) + ".jsonl");
      inputs.push_back(p);
      store[rule] = read_records<SceneEmbedding>(p, scene_embedding_from_json);
    }
    const std::string hash = stage_hash(to_json(cfg_).at("train"));
    const fs::path out_json = out_dir_ / layout::kAblationJson;
    const fs::path out_text = out_dir_ / layout::kAblationText;
    if (up_to_date(kStage, hash, inputs)) return std::vector<AblationRow>{};
    auto rows = run_ablation(store, cfg_.train);
    write_file(out_json, to_json(rows).dump(2) + "\n");
    write_file(out_text, format_ablation_table(rows));
    record(kStage, hash, inputs, {out_json, out_text});
    return rows;
  });
}

EvalReport Pipeline::run_all() {
  cfg_.validate(true);
  fs::path segments_path;
  if (cfg_.paths.segments.empty()) {
    segments_path = ingest(cfg_.paths.geolife_root);
  } else {
    segments_path = cfg_.paths.segments;
  }
  const fs::path features_path = features(segments_path);
  render(segments_path);
  const fs::path narratives = narrate(features_path, segments_path);
  const fs::path embeddings = embed(segments_path, narratives);
  const auto combined = combine(embeddings);
  const fs::path chosen = out_dir_ / layout::kCombinedDir / (std::string(to_string(cfg_.rule)) + ".jsonl");
  const fs::path model = train(chosen);
  EvalReport report = eval(model, chosen);
  if (cfg_.ablation) ablate(out_dir_ / layout::kCombinedDir);
  save_manifest();
  return report;
}

void cmd_synth(const SynthConfig& cfg, const fs::path& out_dir) {
  const SynthCorpus corpus = synthesize(cfg);
  fs::create_directories(out_dir);
  write_segments(out_dir / layout::kSegments, corpus.segments);
  write_file(out_dir / layout::kSynthOsm, osm::write_osm_xml(corpus.osm));
}

}  // namespace trajscene
