#include "trajscene/config.hpp"

#include <filesystem>
#include <set>

#include "trajscene/digest.hpp"
#include "trajscene/error.hpp"
#include "trajscene/interchange.hpp"

namespace trajscene {

using nlohmann::json;

namespace {

// Reads optional keys from one JSON object and rejects any it does not know.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ConfigError("config section '" + name_ + "' must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError("config key '" + name_ + "." + key + "' has the wrong type: " + e.what());
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  std::string path(const char* key) const { return name_.empty() ? key : name_ + "." + key; }

  void finish() const {
    for (const auto& [k, _] : j_.items()) {
      if (!seen_.count(k)) throw ConfigError("unknown config key '" + (name_.empty() ? k : name_ + "." + k) + "'");
    }
  }

 private:
  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

void read_endpoint(const json& j, const std::string& name, remote::EndpointConfig& e) {
  Section s(j, name);
  s.get("url", e.url);
  s.get("model_id", e.model_id);
  s.get("token_env", e.token_env);
  s.get("timeout_s", e.timeout_s);
  s.get("retries", e.retries);
  s.get("backoff_s", e.backoff_s);
  s.get("max_in_flight", e.max_in_flight);
  s.get("requests_per_minute", e.requests_per_minute);
  s.finish();
}

json endpoint_json(const remote::EndpointConfig& e) {
  return {{"url", e.url},
          {"model_id", e.model_id},
          {"token_env", e.token_env},
          {"timeout_s", e.timeout_s},
          {"retries", e.retries},
          {"backoff_s", e.backoff_s},
          {"max_in_flight", e.max_in_flight},
          {"requests_per_minute", e.requests_per_minute}};
}

}  // namespace

PipelineConfig config_from_json(const json& j) {
  PipelineConfig c;
  Section root(j, "");
  if (const json* p = root.child("paths")) {
    Section s(*p, "paths");
    s.get("geolife_root", c.paths.geolife_root);
    s.get("segments", c.paths.segments);
    s.get("osm", c.paths.osm);
    s.get("out_dir", c.paths.out_dir);
    s.finish();
  }
  if (const json* p = root.child("cleaning")) {
    Section s(*p, "cleaning");
    s.get("max_speed_mps", c.cleaning.max_speed_mps);
    s.get("max_gap_s", c.cleaning.max_gap_s);
    s.get("min_points", c.cleaning.min_points);
    s.get("min_duration_s", c.cleaning.min_duration_s);
    s.finish();
  }
  if (const json* p = root.child("kinematics")) {
    Section s(*p, "kinematics");
    s.get("stationary_speed_mps", c.kinematics.stationary_speed_mps);
    s.get("brief_min_s", c.kinematics.brief_min_s);
    s.get("brief_max_s", c.kinematics.brief_max_s);
    s.get("prolonged_min_s", c.kinematics.prolonged_min_s);
    s.get("sharp_turn_deg", c.kinematics.sharp_turn_deg);
    s.get("min_leg_m", c.kinematics.min_leg_m);
    s.get("local_utc_offset_h", c.kinematics.local_utc_offset_h);
    s.finish();
  }
  if (const json* p = root.child("render")) {
    Section s(*p, "render");
    s.get("buffer_frac", c.render.buffer_frac);
    s.get("raster", c.render.raster);
    if (const json* st = s.child("style")) {
      Section ss(*st, "render.style");
      auto& y = c.render.style;
      ss.get("style_version", y.style_version);
      ss.get("width_px", y.width_px);
      ss.get("height_px", y.height_px);
      ss.get("background", y.background);
      ss.get("road_color", y.road_color);
      ss.get("road_width", y.road_width);
      ss.get("subway_color", y.subway_color);
      ss.get("subway_width", y.subway_width);
      ss.get("bus_color", y.bus_color);
      ss.get("bus_radius", y.bus_radius);
      ss.get("trajectory_color", y.trajectory_color);
      ss.get("trajectory_width", y.trajectory_width);
      ss.get("marker_size", y.marker_size);
      ss.finish();
    }
    s.finish();
  }
  if (const json* p = root.child("narrative")) {
    Section s(*p, "narrative");
    s.get("source", c.narrative.source);
    s.get("point_cap", c.narrative.point_cap);
    if (const json* b = s.child("speed_bands")) {
      Section sb(*b, "narrative.speed_bands");
      sb.get("walking_max", c.narrative.bands.walking_max);
      sb.get("cycling_max", c.narrative.bands.cycling_max);
      sb.get("urban_max", c.narrative.bands.urban_max);
      sb.finish();
    }
    if (const json* e = s.child("endpoint")) read_endpoint(*e, "narrative.endpoint", c.narrative.endpoint);
    s.finish();
  }
  if (const json* p = root.child("embedding")) {
    Section s(*p, "embedding");
    s.get("embedder", c.embedding.embedder);
    s.get("dim", c.embedding.dim);
    s.get("seed", c.embedding.seed);
    if (const json* e = s.child("endpoint")) read_endpoint(*e, "embedding.endpoint", c.embedding.endpoint);
    s.finish();
  }
  if (const json* p = root.child("train")) {
    Section s(*p, "train");
    s.get("hidden_dims", c.train.hidden_dims);
    s.get("learning_rate", c.train.learning_rate);
    s.get("batch_size", c.train.batch_size);
    s.get("epochs", c.train.epochs);
    s.get("l2_penalty", c.train.l2_penalty);
    s.get("split_seed", c.train.split_seed);
    s.get("init_seed", c.train.init_seed);
    s.get("train_frac", c.train.train_frac);
    s.get("val_frac", c.train.val_frac);
    s.get("test_frac", c.train.test_frac);
    s.finish();
  }
  std::string rule = std::string(to_string(c.rule));
  root.get("combine_rule", rule);
  try {
    c.rule = combine_rule_from_string(rule);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  root.get("ablation", c.ablation);
  root.finish();
  return c;
}

json to_json(const PipelineConfig& c) {
  const auto& y = c.render.style;
  return {
      {"paths",
       {{"geolife_root", c.paths.geolife_root},
        {"segments", c.paths.segments},
        {"osm", c.paths.osm},
        {"out_dir", c.paths.out_dir}}},
      {"cleaning",
       {{"max_speed_mps", c.cleaning.max_speed_mps},
        {"max_gap_s", c.cleaning.max_gap_s},
        {"min_points", c.cleaning.min_points},
        {"min_duration_s", c.cleaning.min_duration_s}}},
      {"kinematics",
       {{"stationary_speed_mps", c.kinematics.stationary_speed_mps},
        {"brief_min_s", c.kinematics.brief_min_s},
        {"brief_max_s", c.kinematics.brief_max_s},
        {"prolonged_min_s", c.kinematics.prolonged_min_s},
        {"sharp_turn_deg", c.kinematics.sharp_turn_deg},
        {"min_leg_m", c.kinematics.min_leg_m},
        {"local_utc_offset_h", c.kinematics.local_utc_offset_h}}},
      {"render",
       {{"buffer_frac", c.render.buffer_frac},
        {"raster", c.render.raster},
        {"style",
         {{"style_version", y.style_version},
          {"width_px", y.width_px},
          {"height_px", y.height_px},
          {"background", y.background},
          {"road_color", y.road_color},
          {"road_width", y.road_width},
          {"subway_color", y.subway_color},
          {"subway_width", y.subway_width},
          {"bus_color", y.bus_color},
          {"bus_radius", y.bus_radius},
          {"trajectory_color", y.trajectory_color},
          {"trajectory_width", y.trajectory_width},
          {"marker_size", y.marker_size}}}}},
      {"narrative",
       {{"source", c.narrative.source},
        {"point_cap", c.narrative.point_cap},
        {"speed_bands",
         {{"walking_max", c.narrative.bands.walking_max},
          {"cycling_max", c.narrative.bands.cycling_max},
          {"urban_max", c.narrative.bands.urban_max}}},
        {"endpoint", endpoint_json(c.narrative.endpoint)}}},
      {"embedding",
       {{"embedder", c.embedding.embedder},
        {"dim", c.embedding.dim},
        {"seed", c.embedding.seed},
        {"endpoint", endpoint_json(c.embedding.endpoint)}}},
      {"train",
       {{"hidden_dims", c.train.hidden_dims},
        {"learning_rate", c.train.learning_rate},
        {"batch_size", c.train.batch_size},
        {"epochs", c.train.epochs},
        {"l2_penalty", c.train.l2_penalty},
        {"split_seed", c.train.split_seed},
        {"init_seed", c.train.init_seed},
        {"train_frac", c.train.train_frac},
        {"val_frac", c.train.val_frac},
        {"test_frac", c.train.test_frac}}},
      {"combine_rule", std::string(to_string(c.rule))},
      {"ablation", c.ablation},
  };
}

PipelineConfig load_config(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

void PipelineConfig::validate(bool check_paths) const {
  cleaning.validate();
  kinematics.validate();
  render.style.validate();
  if (!(render.buffer_frac > 0.0)) throw ConfigError("render.buffer_frac must be > 0");
  if (narrative.source != "deterministic" && narrative.source != "remote") {
    throw ConfigError("narrative.source must be 'deterministic' or 'remote'");
  }
  if (narrative.point_cap < 2) throw ConfigError("narrative.point_cap must be >= 2");
  if (!(narrative.bands.walking_max < narrative.bands.cycling_max &&
        narrative.bands.cycling_max < narrative.bands.urban_max)) {
    throw ConfigError("narrative.speed_bands must be increasing");
  }
  if (embedding.embedder != "offline" && embedding.embedder != "remote") {
    throw ConfigError("embedding.embedder must be 'offline' or 'remote'");
  }
  if (embedding.dim < 8) throw ConfigError("embedding.dim must be >= 8");
  train.validate();
  if (narrative.source == "remote") narrative.endpoint.validate();
  if (embedding.embedder == "remote") {
    embedding.endpoint.validate();
    if (!render.raster) throw ConfigError("embedding.embedder = remote requires render.raster = true");
  }

  if (!check_paths) return;
  auto must_exist = [](const std::string& p, const char* key) {
    if (!p.empty() && !std::filesystem::exists(p)) {
      throw ConfigError(std::string(key) + " does not exist: " + p);
    }
  };
  must_exist(paths.geolife_root, "paths.geolife_root");
  must_exist(paths.segments, "paths.segments");
  must_exist(paths.osm, "paths.osm");
  if (paths.segments.empty() && paths.geolife_root.empty()) {
    throw ConfigError("set paths.segments or paths.geolife_root");
  }
  if (narrative.source == "remote") remote::bearer_token(narrative.endpoint);
  if (embedding.embedder == "remote") remote::bearer_token(embedding.endpoint);
}

void PipelineConfig::apply_seed(std::uint64_t seed) {
  embedding.seed = seed;
  train.split_seed = seed;
  train.init_seed = seed;
}

std::string json_hash(const json& j) { return sha256_hex(j.dump()); }

}  // namespace trajscene
