#include "trajscene/embedding.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <regex>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "trajscene/error.hpp"
#include "trajscene/geo.hpp"
#include "trajscene/kinematics.hpp"

namespace trajscene {

std::string_view to_string(Modality m) { return m == Modality::image ? "image" : "text"; }

std::string_view to_string(CombineRule r) {
  switch (r) {
    case CombineRule::concatenation: return "concatenation";
    case CombineRule::fusion: return "fusion";
    case CombineRule::image_only: return "image_only";
    case CombineRule::text_only: return "text_only";
  }
  return "concatenation";
}

Modality modality_from_string(std::string_view s) {
  if (s == "image") return Modality::image;
  if (s == "text") return Modality::text;
  throw Error("unknown modality '" + std::string(s) + "'");
}

CombineRule combine_rule_from_string(std::string_view s) {
  for (CombineRule r : kAllRules) {
    if (s == to_string(r)) return r;
  }
  throw Error("unknown combine rule '" + std::string(s) + "'");
}

std::uint64_t token_hash(std::string_view token, std::uint64_t seed) {
  auto mix = [](std::uint64_t h) {
    h ^= h >> 33;
    h *= 0xff51afd7ed558ccdULL;
    h ^= h >> 33;
    h *= 0xc4ceb9fe1a85ec53ULL;
    h ^= h >> 33;
    return h;
  };
  std::uint64_t h = 0xcbf29ce484222325ULL ^ mix(seed + 0x9e3779b97f4a7c15ULL);
  for (unsigned char c : token) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return mix(h);
}

std::vector<double> hash_tokens(const std::vector<std::string>& tokens, std::size_t dim,
                                std::uint64_t seed) {
  if (dim < 8) throw ConfigError("embedding dimension must be >= 8");
  std::vector<double> v(dim, 0.0);
  for (const auto& tok : tokens) {
    const std::uint64_t h = token_hash(tok, seed);
    v[h % dim] += (h >> 63) ? -1.0 : 1.0;
  }
  return v;
}

void normalize_or_guard(std::vector<double>& v) {
  double n2 = 0.0;
  for (double x : v) n2 += x * x;
  if (n2 == 0.0) {
    if (!v.empty()) v[0] = 1.0;
    return;
  }
  const double inv = 1.0 / std::sqrt(n2);
  for (double& x : v) x *= inv;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

namespace {

// Each quantized feature token counts this many times against a prose word,
// which appears at most once.
constexpr int kFeatureTokenWeight = 4;

int bin(double value, double width, int cap) {
  return std::clamp(static_cast<int>(std::floor(value / width)), 0, cap);
}

int log2_bin(double n) { return static_cast<int>(std::floor(std::log2(n + 1.0))); }

std::optional<double> capture(const std::string& text, const std::regex& re, int group = 1) {
  std::smatch m;
  if (!std::regex_search(text, m, re)) return std::nullopt;
  return std::stod(m[group].str());
}

}  // namespace

std::vector<std::string> text_tokens(std::string_view full_text) {
  std::vector<std::string> words = tokenize(full_text);
  // Numeric literals enter only through the quantized feature tokens below.
  std::erase_if(words, [](const std::string& w) {
    return std::all_of(w.begin(), w.end(), [](unsigned char c) { return std::isdigit(c) != 0; });
  });
  std::sort(words.begin(), words.end());
  words.erase(std::unique(words.begin(), words.end()), words.end());
  std::vector<std::string> tokens;
  const std::string text(full_text);

  static const std::regex kAvg(R"(Average Speed: ~([0-9.]+) km/h)");
  static const std::regex kRange(R"(Speed Variation: ([0-9.]+)-([0-9.]+) km/h)");
  static const std::regex kStd(R"(standard deviation ([0-9.]+) km/h)");
  static const std::regex kDetour(R"(Detour Index: ~([0-9.]+))");
  static const std::regex kDuration(R"(\(([0-9]+) seconds\))");
  static const std::regex kPath(R"(Total travel distance ~([0-9]+) meters)");
  static const std::regex kTurns(R"(Turn Frequency: ([0-9]+) sharp turn)");
  static const std::regex kBrief(R"(Stops: ([0-9]+) brief)");
  static const std::regex kProlonged(R"(and ([0-9]+) prolonged stop)");

  const auto avg_kmh = capture(text, kAvg);
  const auto max_kmh = capture(text, kRange, 2);
  const auto std_kmh = capture(text, kStd);
  const auto detour = capture(text, kDetour);
  const auto duration = capture(text, kDuration);
  const auto path = capture(text, kPath);
  const auto turns = capture(text, kTurns);
  const auto brief = capture(text, kBrief);
  const auto prolonged = capture(text, kProlonged);

  if (avg_kmh) {
    const double v = *avg_kmh / 3.6;
    tokens.push_back(fmt::format("#avg_speed_q0.5={}", bin(v, 0.5, 80)));
    tokens.push_back(fmt::format("#avg_speed_q2={}", bin(v, 2.0, 20)));
  }
  if (max_kmh) tokens.push_back(fmt::format("#max_speed_q2={}", bin(*max_kmh / 3.6, 2.0, 30)));
  if (std_kmh) tokens.push_back(fmt::format("#speed_std_q0.5={}", bin(*std_kmh / 3.6, 0.5, 30)));
  if (detour) tokens.push_back(fmt::format("#detour_q0.25={}", bin(*detour, 0.25, 24)));
  if (duration && *duration > 0) {
    const double minutes = *duration / 60.0;
    if (brief || prolonged) {
      const double stops = brief.value_or(0) + prolonged.value_or(0);
      tokens.push_back(fmt::format("#stops_per_5min_q0.5={}", bin(stops / minutes * 5.0, 0.5, 20)));
    }
    if (prolonged) {
      tokens.push_back(fmt::format("#prolonged_per_5min_q0.5={}", bin(*prolonged / minutes * 5.0, 0.5, 20)));
    }
  }
  if (turns && path && *path > 0) {
    tokens.push_back(fmt::format("#turns_per_km_q1={}", bin(*turns / (*path / 1000.0), 1.0, 30)));
  }
  for (std::size_t i = 0, n = tokens.size(); i < n; ++i) {
    for (int k = 1; k < kFeatureTokenWeight; ++k) tokens.push_back(tokens[i]);
  }
  tokens.insert(tokens.end(), words.begin(), words.end());
  return tokens;
}

ModalityEmbedding embed_text_offline(const SceneText& text, std::size_t dim, std::uint64_t seed) {
  ModalityEmbedding e;
  e.segment_id = text.segment_id;
  e.modality = Modality::text;
  e.vector = hash_tokens(text_tokens(text.full_text), dim, seed);
  normalize_or_guard(e.vector);
  e.embedder_id = fmt::format("offline-hash-text-v1/d={}/seed={}", dim, seed);
  return e;
}

namespace {

constexpr double kNearM = 30.0;

int distance_bin(double m) {
  if (m < 30.0) return 0;
  if (m < 100.0) return 1;
  if (m < 300.0) return 2;
  if (m < 1000.0) return 3;
  return 4;
}

double point_polyline_distance(double lat, double lon, const Polyline& line) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < line.size(); ++i) {
    best = std::min(best, geo::point_segment_distance_m(lat, lon, line[i - 1].lat, line[i - 1].lon,
                                                        line[i].lat, line[i].lon));
  }
  return best;
}

}  // namespace

std::vector<std::string> image_tokens(const TrajectorySegment& seg, const SceneSidecar& scene,
                                      const SceneLayers& layers) {
  std::vector<std::string> tokens;
  tokens.push_back(fmt::format("#roads_log2={}", log2_bin(static_cast<double>(layers.roads.size()))));
  tokens.push_back(fmt::format("#subway_log2={}", log2_bin(static_cast<double>(layers.subway_lines.size()))));
  tokens.push_back(fmt::format("#bus_log2={}", log2_bin(static_cast<double>(layers.bus_stations.size()))));
  tokens.push_back(fmt::format("#path_px_q150={}", bin(scene.trajectory_px_length, 150.0, 40)));

  if (layers.subway_lines.empty()) {
    tokens.push_back("#subway_dist=none");
    tokens.push_back("#subway_share=none");
  } else {
    double best = std::numeric_limits<double>::infinity();
    std::size_t near = 0;
    for (const auto& p : seg.points) {
      double d = std::numeric_limits<double>::infinity();
      for (const auto& line : layers.subway_lines) d = std::min(d, point_polyline_distance(p.lat, p.lon, line));
      best = std::min(best, d);
      if (d < kNearM) ++near;
    }
    tokens.push_back(fmt::format("#subway_dist={}", distance_bin(best)));
    const double share = static_cast<double>(near) / static_cast<double>(seg.points.size());
    tokens.push_back(fmt::format("#subway_share_q0.1={}", bin(share, 0.1, 10)));
  }

  if (layers.bus_stations.empty()) {
    tokens.push_back("#bus_dist=none");
    tokens.push_back("#bus_near=none");
  } else {
    Polyline track;
    track.reserve(seg.points.size());
    for (const auto& p : seg.points) track.push_back({p.lat, p.lon});
    double best = std::numeric_limits<double>::infinity();
    std::size_t near = 0;
    for (const auto& s : layers.bus_stations) {
      const double d = point_polyline_distance(s.lat, s.lon, track);
      best = std::min(best, d);
      if (d < kNearM) ++near;
    }
    tokens.push_back(fmt::format("#bus_dist={}", distance_bin(best)));
    tokens.push_back(fmt::format("#bus_near_log2={}", log2_bin(static_cast<double>(near))));
  }

  const double w_m = scene.bbox.width() * std::cos(geo::deg2rad((scene.bbox.min_lat + scene.bbox.max_lat) / 2));
  const double h_m = scene.bbox.height();
  tokens.push_back(fmt::format("#aspect_log2={}", static_cast<int>(std::lround(std::log2(w_m / h_m)))));
  const double diag_m =
      geo::haversine_m(scene.bbox.min_lat, scene.bbox.min_lon, scene.bbox.max_lat, scene.bbox.max_lon);
  tokens.push_back(fmt::format("#extent_halfoct={}", static_cast<int>(std::floor(2.0 * std::log2(diag_m + 1.0)))));
  tokens.push_back(fmt::format("#roads_halfoct={}",
                               static_cast<int>(std::floor(2.0 * std::log2(layers.roads.size() + 1.0)))));
  return tokens;
}

ModalityEmbedding embed_image_offline(const TrajectorySegment& seg,
                                      const std::optional<SceneSidecar>& scene,
                                      const SceneLayers& layers, std::size_t dim,
                                      std::uint64_t seed) {
  if (!scene) throw Error("segment " + seg.segment_id + " has no scene sidecar; run render first");
  ModalityEmbedding e;
  e.segment_id = seg.segment_id;
  e.modality = Modality::image;
  e.vector = hash_tokens(image_tokens(seg, *scene, layers), dim, seed);
  normalize_or_guard(e.vector);
  e.embedder_id = fmt::format("offline-hash-image-v1/d={}/seed={}", dim, seed);
  return e;
}

std::string base64_encode(std::string_view bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(bytes.data()),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

HttpEmbedClient::HttpEmbedClient(remote::EndpointConfig cfg)
    : cfg_(std::move(cfg)), token_(remote::bearer_token(cfg_)) {
  cfg_.validate();
}

EmbedResponse HttpEmbedClient::embed(const EmbedRequest& req) {
  const nlohmann::json body{
      {"model", cfg_.model_id},
      {"modality", std::string(to_string(req.modality))},
      {"payload", req.modality == Modality::image ? base64_encode(req.payload) : req.payload}};
  const std::string text = remote::post_json(cfg_, token_, body.dump());
  try {
    const auto j = nlohmann::json::parse(text);
    EmbedResponse r;
    r.vector = j.at("vector").get<std::vector<double>>();
    r.dimension = j.at("dimension").get<std::size_t>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError(std::string("malformed embedding response: ") + e.what());
  }
}

RemoteEmbedding embed_remote(const std::string& segment_id, const EmbedRequest& req,
                             EmbedClient& client, std::size_t declared_dim, int retries,
                             double backoff_s) {
  RemoteEmbedding out;
  EmbedResponse resp = remote::with_retries([&] { return client.embed(req); }, retries, backoff_s, out.attempts);
  if (resp.vector.size() != declared_dim || resp.dimension != declared_dim) {
    throw IntegrityError(fmt::format("provider returned dimension {} (vector length {}), expected {}",
                                     resp.dimension, resp.vector.size(), declared_dim));
  }
  double n2 = 0.0;
  for (double x : resp.vector) n2 += x * x;
  if (!(n2 > 0.0) || !std::isfinite(n2)) throw IntegrityError("provider returned a zero or non-finite vector");
  normalize_or_guard(resp.vector);
  out.embedding.segment_id = segment_id;
  out.embedding.modality = req.modality;
  out.embedding.vector = std::move(resp.vector);
  out.embedding.embedder_id = fmt::format("{}/d={}", client.model_id(), declared_dim);
  return out;
}

SceneEmbedding combine(const std::optional<ModalityEmbedding>& image,
                       const std::optional<ModalityEmbedding>& text, CombineRule rule) {
  if (image && image->modality != Modality::image) throw Error("image slot holds a text embedding");
  if (text && text->modality != Modality::text) throw Error("text slot holds an image embedding");
  if (image && text && image->segment_id != text->segment_id) {
    throw Error("segment_id mismatch: " + image->segment_id + " vs " + text->segment_id);
  }
  SceneEmbedding out;
  out.combine_rule = rule;
  switch (rule) {
    case CombineRule::concatenation:
    case CombineRule::fusion:
      if (!image || !text) {
        throw Error(std::string(to_string(rule)) + " requires both image and text embeddings");
      }
      break;
    case CombineRule::image_only:
      if (!image) throw Error("image_only requires an image embedding");
      break;
    case CombineRule::text_only:
      if (!text) throw Error("text_only requires a text embedding");
      break;
  }
  out.segment_id = image ? image->segment_id : text->segment_id;
  switch (rule) {
    case CombineRule::concatenation:
      out.combined = image->vector;
      out.combined.insert(out.combined.end(), text->vector.begin(), text->vector.end());
      out.embedder_id = image->embedder_id + "+" + text->embedder_id;
      break;
    case CombineRule::fusion:
      if (image->vector.size() != text->vector.size()) {
        throw Error("fusion requires equal dimensions");
      }
      out.combined.resize(image->vector.size());
      for (std::size_t i = 0; i < out.combined.size(); ++i) {
        out.combined[i] = 0.5 * (image->vector[i] + text->vector[i]);
      }
      normalize_or_guard(out.combined);
      out.embedder_id = image->embedder_id + "+" + text->embedder_id;
      break;
    case CombineRule::image_only:
      out.combined = image->vector;
      out.embedder_id = image->embedder_id;
      break;
    case CombineRule::text_only:
      out.combined = text->vector;
      out.embedder_id = text->embedder_id;
      break;
  }
  return out;
}

}  // namespace trajscene
