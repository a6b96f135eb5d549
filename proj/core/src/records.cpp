#include "trajscene/records.hpp"

#include "trajscene/error.hpp"

namespace trajscene {

using nlohmann::json;

namespace {

template <typename Fn>
auto guarded(const char* what, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw IntegrityError(std::string("malformed ") + what + " record: " + e.what());
  }
}

DayType day_type_from(const std::string& s) {
  if (s == "weekday") return DayType::weekday;
  if (s == "weekend") return DayType::weekend;
  throw IntegrityError("unknown day_type " + s);
}

TimeOfDay time_of_day_from(const std::string& s) {
  for (auto t : {TimeOfDay::morning_peak, TimeOfDay::evening_peak, TimeOfDay::daytime_offpeak, TimeOfDay::night}) {
    if (s == to_string(t)) return t;
  }
  throw IntegrityError("unknown time_of_day " + s);
}

json mode_json(const std::optional<ModeLabel>& m) {
  return m ? json(std::string(to_string(*m))) : json(nullptr);
}

std::optional<ModeLabel> mode_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  auto m = normalize_mode(j.get<std::string>());
  if (!m) throw IntegrityError("unknown mode " + j.dump());
  return m;
}

}  // namespace

json to_json(const KinematicsReport& r) {
  json periods = json::array();
  for (const auto& p : r.temporal.inactivity_periods) periods.push_back({p.start_ts, p.end_ts, p.duration_s});
  const auto& d = r.dynamics;
  return {{"segment_id", r.segment_id},
          {"temporal",
           {{"start_ts", r.temporal.start_ts},
            {"end_ts", r.temporal.end_ts},
            {"duration_s", r.temporal.duration_s},
            {"day_type", std::string(to_string(r.temporal.day_type))},
            {"time_of_day", std::string(to_string(r.temporal.time_of_day))},
            {"inactivity_periods", periods}}},
          {"dynamics",
           {{"avg_speed_mps", d.avg_speed_mps},
            {"speed_min_mps", d.speed_min_mps},
            {"speed_max_mps", d.speed_max_mps},
            {"speed_std_mps", d.speed_std_mps},
            {"sharp_turn_count", d.sharp_turn_count},
            {"brief_stop_count", d.brief_stop_count},
            {"prolonged_stop_count", d.prolonged_stop_count},
            {"path_length_m", d.path_length_m},
            {"straight_line_m", d.straight_line_m},
            {"detour_index", d.detour_index ? json(*d.detour_index) : json(nullptr)}}}};
}

KinematicsReport report_from_json(const json& j) {
  return guarded("kinematics", [&] {
    KinematicsReport r;
    r.segment_id = j.at("segment_id").get<std::string>();
    const auto& t = j.at("temporal");
    r.temporal.start_ts = t.at("start_ts").get<double>();
    r.temporal.end_ts = t.at("end_ts").get<double>();
    r.temporal.duration_s = t.at("duration_s").get<double>();
    r.temporal.day_type = day_type_from(t.at("day_type").get<std::string>());
    r.temporal.time_of_day = time_of_day_from(t.at("time_of_day").get<std::string>());
    for (const auto& p : t.at("inactivity_periods")) {
      r.temporal.inactivity_periods.push_back({p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>()});
    }
    const auto& d = j.at("dynamics");
    auto& o = r.dynamics;
    o.avg_speed_mps = d.at("avg_speed_mps").get<double>();
    o.speed_min_mps = d.at("speed_min_mps").get<double>();
    o.speed_max_mps = d.at("speed_max_mps").get<double>();
    o.speed_std_mps = d.at("speed_std_mps").get<double>();
    o.sharp_turn_count = d.at("sharp_turn_count").get<int>();
    o.brief_stop_count = d.at("brief_stop_count").get<int>();
    o.prolonged_stop_count = d.at("prolonged_stop_count").get<int>();
    o.path_length_m = d.at("path_length_m").get<double>();
    o.straight_line_m = d.at("straight_line_m").get<double>();
    if (!d.at("detour_index").is_null()) o.detour_index = d.at("detour_index").get<double>();
    return r;
  });
}

json to_json(const SceneText& t) {
  return {{"segment_id", t.segment_id},
          {"source", std::string(to_string(t.source))},
          {"temporal_block", t.temporal_block},
          {"dynamics_block", t.dynamics_block},
          {"summary_block", t.summary_block},
          {"full_text", t.full_text},
          {"degraded", t.degraded},
          {"attempts", t.attempts}};
}

SceneText scene_text_from_json(const json& j) {
  return guarded("narrative", [&] {
    SceneText t;
    t.segment_id = j.at("segment_id").get<std::string>();
    const auto src = j.at("source").get<std::string>();
    if (src == "deterministic") {
      t.source = TextSource::deterministic;
    } else if (src == "remote_llm") {
      t.source = TextSource::remote_llm;
    } else {
      throw IntegrityError("unknown narrative source " + src);
    }
    t.temporal_block = j.at("temporal_block").get<std::string>();
    t.dynamics_block = j.at("dynamics_block").get<std::string>();
    t.summary_block = j.at("summary_block").get<std::string>();
    t.full_text = j.at("full_text").get<std::string>();
    t.degraded = j.value("degraded", false);
    t.attempts = j.value("attempts", 0);
    return t;
  });
}

json to_json(const SceneSidecar& s) {
  return {{"segment_id", s.segment_id},
          {"bbox", {s.bbox.min_lon, s.bbox.min_lat, s.bbox.max_lon, s.bbox.max_lat}},
          {"style_version", s.style_version},
          {"width_px", s.width_px},
          {"height_px", s.height_px},
          {"trajectory_px_length", s.trajectory_px_length}};
}

SceneSidecar sidecar_from_json(const json& j) {
  return guarded("scene sidecar", [&] {
    SceneSidecar s;
    s.segment_id = j.at("segment_id").get<std::string>();
    const auto& b = j.at("bbox");
    s.bbox = {b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(), b.at(3).get<double>()};
    s.style_version = j.at("style_version").get<std::string>();
    s.width_px = j.at("width_px").get<int>();
    s.height_px = j.at("height_px").get<int>();
    s.trajectory_px_length = j.at("trajectory_px_length").get<double>();
    return s;
  });
}

json to_json(const ModalityEmbedding& e) {
  return {{"segment_id", e.segment_id},
          {"modality", std::string(to_string(e.modality))},
          {"embedder_id", e.embedder_id},
          {"vector", e.vector}};
}

ModalityEmbedding modality_embedding_from_json(const json& j) {
  return guarded("embedding", [&] {
    ModalityEmbedding e;
    e.segment_id = j.at("segment_id").get<std::string>();
    e.modality = modality_from_string(j.at("modality").get<std::string>());
    e.embedder_id = j.at("embedder_id").get<std::string>();
    e.vector = j.at("vector").get<std::vector<double>>();
    return e;
  });
}

json to_json(const SceneEmbedding& e) {
  return {{"segment_id", e.segment_id},
          {"combine_rule", std::string(to_string(e.combine_rule))},
          {"embedder_id", e.embedder_id},
          {"mode", mode_json(e.mode_label)},
          {"vector", e.combined}};
}

SceneEmbedding scene_embedding_from_json(const json& j) {
  return guarded("combined embedding", [&] {
    SceneEmbedding e;
    e.segment_id = j.at("segment_id").get<std::string>();
    e.combine_rule = combine_rule_from_string(j.at("combine_rule").get<std::string>());
    e.embedder_id = j.at("embedder_id").get<std::string>();
    e.mode_label = mode_from(j.at("mode"));
    e.combined = j.at("vector").get<std::vector<double>>();
    return e;
  });
}

}  // namespace trajscene
