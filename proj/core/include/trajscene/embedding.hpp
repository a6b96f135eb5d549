#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "trajscene/narrative.hpp"
#include "trajscene/remote.hpp"
#include "trajscene/scene.hpp"
#include "trajscene/types.hpp"

namespace trajscene {

enum class Modality { image, text };
enum class CombineRule { concatenation, fusion, image_only, text_only };

inline constexpr std::array<CombineRule, 4> kAllRules{
    CombineRule::concatenation, CombineRule::fusion, CombineRule::image_only,
    CombineRule::text_only};

std::string_view to_string(Modality m);
std::string_view to_string(CombineRule r);
Modality modality_from_string(std::string_view s);
CombineRule combine_rule_from_string(std::string_view s);

struct ModalityEmbedding {
  std::string segment_id;
  Modality modality = Modality::text;
  std::vector<double> vector;
  std::string embedder_id;
};

struct SceneEmbedding {
  std::string segment_id;
  std::vector<double> combined;
  std::optional<ModeLabel> mode_label;
  CombineRule combine_rule = CombineRule::concatenation;
  std::string embedder_id;
};

/// Seeded 64-bit string hash (FNV-1a followed by a 64-bit avalanche mix).
std::uint64_t token_hash(std::string_view token, std::uint64_t seed);

/// Signed feature hashing of a token bag: index = hash mod dim, sign from the
/// top bit. Not normalized.
std::vector<double> hash_tokens(const std::vector<std::string>& tokens, std::size_t dim,
                                std::uint64_t seed);

/// L2-normalizes in place; an all-zero vector becomes e_1.
void normalize_or_guard(std::vector<double>& v);

/// Lowercased alphanumeric runs of `text`.
std::vector<std::string> tokenize(std::string_view text);

/// Distinct non-numeric word tokens plus weighted quantized numeric tokens
/// recovered from the narrative.
std::vector<std::string> text_tokens(std::string_view full_text);

ModalityEmbedding embed_text_offline(const SceneText& text, std::size_t dim, std::uint64_t seed);

/// Scene-statistics token bag for one rendered scene.
std::vector<std::string> image_tokens(const TrajectorySegment& seg, const SceneSidecar& scene,
                                      const SceneLayers& layers);

ModalityEmbedding embed_image_offline(const TrajectorySegment& seg,
                                      const std::optional<SceneSidecar>& scene,
                                      const SceneLayers& layers, std::size_t dim,
                                      std::uint64_t seed);

struct EmbedRequest {
  Modality modality = Modality::text;
  std::string payload;  // UTF-8 text, or raw image bytes (base64-encoded on the wire)
};

struct EmbedResponse {
  std::vector<double> vector;
  std::size_t dimension = 0;
};

class EmbedClient {
 public:
  virtual ~EmbedClient() = default;
  /// One attempt. Throws TransportError on failure.
  virtual EmbedResponse embed(const EmbedRequest& req) = 0;
  virtual std::string model_id() const = 0;
};

/// Request {"model", "modality", "payload"}; response {"vector", "dimension"}.
class HttpEmbedClient : public EmbedClient {
 public:
  explicit HttpEmbedClient(remote::EndpointConfig cfg);
  EmbedResponse embed(const EmbedRequest& req) override;
  std::string model_id() const override { return cfg_.model_id; }

 private:
  remote::EndpointConfig cfg_;
  std::string token_;
};

struct RemoteEmbedding {
  ModalityEmbedding embedding;
  int attempts = 0;
};

/// Fetches a provider vector and normalizes it locally. Throws IntegrityError
/// when the vector length differs from `declared_dim` or the provider's own
/// dimension field.
RemoteEmbedding embed_remote(const std::string& segment_id, const EmbedRequest& req,
                             EmbedClient& client, std::size_t declared_dim, int retries = 2,
                             double backoff_s = 0.0);

/// Combines modality vectors. Concatenation puts the image vector first;
/// fusion is the re-normalized element-wise mean; the *_only rules pass one
/// modality through.
SceneEmbedding combine(const std::optional<ModalityEmbedding>& image,
                       const std::optional<ModalityEmbedding>& text, CombineRule rule);

std::string base64_encode(std::string_view bytes);

}  // namespace trajscene
