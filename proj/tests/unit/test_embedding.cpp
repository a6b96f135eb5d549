#include <cmath>
#include <numeric>
#include <string>

#include <doctest.h>

#include "support.hpp"
#include "trajscene/error.hpp"
#include "trajscene/embedding.hpp"
#include "trajscene/kinematics.hpp"
#include "trajscene/narrative.hpp"
#include "trajscene/scene.hpp"

using namespace trajscene;
using namespace trajscene::testing;
using doctest::Approx;

namespace {

double norm(const std::vector<double>& v) { return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0)); }

ModalityEmbedding unit_embedding(Modality m, std::vector<double> v, std::string id = "s") {
  return {std::move(id), m, std::move(v), "test"};
}

SceneText text_of(std::string full) {
  SceneText t;
  t.segment_id = "s";
  t.full_text = std::move(full);
  return t;
}

class FixedProvider : public EmbedClient {
 public:
  FixedProvider(std::vector<double> v, std::size_t dim, int failures = 0)
      : v_(std::move(v)), dim_(dim), failures_(failures) {}
  EmbedResponse embed(const EmbedRequest&) override {
    if (++calls <= failures_) throw TransportError("HTTP 503", 1, true);
    return {v_, dim_};
  }
  std::string model_id() const override { return "fixed"; }
  int calls = 0;

 private:
  std::vector<double> v_;
  std::size_t dim_;
  int failures_;
};

SceneSidecar sidecar_for(const TrajectorySegment& seg, const SceneLayers& layers) {
  const BBox box = scene_bbox(seg);
  const auto img = render_scene(seg, layers, box);
  return {seg.segment_id, box, img.style_version, img.width_px, img.height_px, img.trajectory_px_length};
}

bool has_token(const std::vector<std::string>& tokens, const std::string& t) {
  return std::find(tokens.begin(), tokens.end(), t) != tokens.end();
}

}  // namespace

TEST_CASE("token hashing") {
  CHECK(token_hash("walk", 1) == token_hash("walk", 1));
  CHECK(token_hash("walk", 1) != token_hash("walk", 2));
  CHECK(token_hash("walk", 1) != token_hash("walks", 1));
  const auto v = hash_tokens({"a", "b", "c"}, 64, 9);
  CHECK(v.size() == 64);
  CHECK(std::accumulate(v.begin(), v.end(), 0.0, [](double s, double x) { return s + std::fabs(x); }) <= 3.0);
  CHECK_THROWS_AS(hash_tokens({"a"}, 4, 1), ConfigError);
}

TEST_CASE("one extra token changes at most one coordinate") {
  const std::vector<std::string> base{"moving", "east", "#avg_speed_q0.5=6", "bus"};
  for (const char* extra : {"north", "stop", "#detour_q0.25=4", "x"}) {
    auto more = base;
    more.push_back(extra);
    for (std::size_t dim : {8u, 64u, 256u}) {
      const auto a = hash_tokens(base, dim, 3);
      const auto b = hash_tokens(more, dim, 3);
      int differing = 0;
      for (std::size_t i = 0; i < dim; ++i) differing += a[i] != b[i];
      CHECK(differing <= 1);
      const std::uint64_t h = token_hash(extra, 3);
      for (std::size_t i = 0; i < dim; ++i) {
        if (i != h % dim) CHECK(a[i] == b[i]);
      }
      CHECK(b[h % dim] - a[h % dim] == ((h >> 63) ? -1.0 : 1.0));
    }
  }
  // The same holds at the narrative level for a new prose word.
  const std::string text = "a quick trip with no stops";
  const auto a = hash_tokens(text_tokens(text), 256, 1);
  const auto b = hash_tokens(text_tokens(text + " eastward"), 256, 1);
  int differing = 0;
  for (std::size_t i = 0; i < 256; ++i) differing += a[i] != b[i];
  CHECK(differing <= 1);
}

TEST_CASE("offline text embedding") {
  const SceneText t = render_narrative(analyze(detour_fixture()));
  const auto a = embed_text_offline(t, 256, 1);
  const auto b = embed_text_offline(t, 256, 1);
  CHECK(a.vector == b.vector);
  CHECK(a.modality == Modality::text);
  CHECK(a.vector.size() == 256);
  CHECK(norm(a.vector) == Approx(1.0).epsilon(1e-12));
  CHECK(embed_text_offline(t, 256, 2).vector != a.vector);
  const auto d128 = embed_text_offline(t, 128, 1);
  CHECK(d128.vector.size() == 128);
  CHECK(embed_text_offline(t, 128, 1).vector == d128.vector);

  const auto empty = embed_text_offline(text_of(""), 16, 1);
  CHECK(empty.vector[0] == 1.0);
  CHECK(std::count(empty.vector.begin(), empty.vector.end(), 0.0) == 15);

  const auto tokens = text_tokens(t.full_text);
  CHECK(has_token(tokens, "#avg_speed_q0.5=6"));  // 3.1 m/s
  CHECK(has_token(tokens, "#detour_q0.25=11"));   // 2.9
  CHECK(has_token(tokens, "detour"));
  CHECK_FALSE(has_token(tokens, "2000"));
}

TEST_CASE("offline image embedding") {
  const auto seg = make_segment({pt(39.905, 116.301, 0), pt(39.905, 116.306, 60), pt(39.905, 116.311, 120)}, "img");
  SceneLayers bare;
  const auto bare_tokens = image_tokens(seg, sidecar_for(seg, bare), bare);
  CHECK(has_token(bare_tokens, "#subway_dist=none"));
  CHECK(has_token(bare_tokens, "#bus_dist=none"));

  SceneLayers on_line;
  on_line.subway_lines.push_back({{39.905, 116.300}, {39.905, 116.312}});
  on_line.bus_stations.push_back({39.9052, 116.306});  // ~22 m off the track
  const auto sc = sidecar_for(seg, on_line);
  const auto tokens = image_tokens(seg, sc, on_line);
  CHECK(has_token(tokens, "#subway_dist=0"));
  CHECK(has_token(tokens, "#subway_share_q0.1=10"));
  CHECK(has_token(tokens, "#bus_dist=0"));

  SceneLayers far;
  far.subway_lines.push_back({{39.915, 116.300}, {39.915, 116.312}});  // ~1.1 km north
  CHECK(has_token(image_tokens(seg, sidecar_for(seg, far), far), "#subway_dist=4"));

  const auto a = embed_image_offline(seg, sc, on_line, 256, 1);
  CHECK(a.vector == embed_image_offline(seg, sc, on_line, 256, 1).vector);
  CHECK(a.modality == Modality::image);
  CHECK(norm(a.vector) == Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(embed_image_offline(seg, std::nullopt, on_line, 256, 1), Error);
}

TEST_CASE("combine rules") {
  const auto img = unit_embedding(Modality::image, {1, 0});
  const auto txt = unit_embedding(Modality::text, {0, 1});
  const auto concat = combine(img, txt, CombineRule::concatenation);
  CHECK(concat.combined == std::vector<double>{1, 0, 0, 1});
  CHECK(norm(concat.combined) == Approx(std::sqrt(2.0)).epsilon(1e-12));
  const auto fusion = combine(img, txt, CombineRule::fusion);
  CHECK(fusion.combined[0] == Approx(0.70710678).epsilon(1e-8));
  CHECK(fusion.combined[1] == Approx(0.70710678).epsilon(1e-8));
  CHECK(norm(fusion.combined) == Approx(1.0).epsilon(1e-12));
  CHECK(combine(std::nullopt, txt, CombineRule::text_only).combined == txt.vector);
  CHECK(combine(img, std::nullopt, CombineRule::image_only).combined == img.vector);

  CHECK_THROWS_AS(combine(std::nullopt, txt, CombineRule::concatenation), Error);
  CHECK_THROWS_AS(combine(img, std::nullopt, CombineRule::fusion), Error);
  CHECK_THROWS_AS(combine(img, std::nullopt, CombineRule::text_only), Error);
  CHECK_THROWS_AS(combine(img, unit_embedding(Modality::text, {0, 1}, "other"), CombineRule::fusion), Error);
  CHECK_THROWS_AS(combine(img, unit_embedding(Modality::text, {0, 0, 1}), CombineRule::fusion), Error);
}

TEST_CASE("concatenation splits back into its parts") {
  const SceneText t = render_narrative(analyze(detour_fixture()));
  auto text = embed_text_offline(t, 64, 4);
  const auto seg = detour_fixture();
  auto image = embed_image_offline(seg, sidecar_for(seg, {}), {}, 64, 4);
  image.segment_id = text.segment_id = "s";
  const auto c = combine(image, text, CombineRule::concatenation);
  REQUIRE(c.combined.size() == 128);
  CHECK(std::vector<double>(c.combined.begin(), c.combined.begin() + 64) == image.vector);
  CHECK(std::vector<double>(c.combined.begin() + 64, c.combined.end()) == text.vector);
  CHECK(std::fabs(norm(c.combined) - std::sqrt(2.0)) < 1e-6);
  CHECK(std::fabs(norm(combine(image, text, CombineRule::fusion).combined) - 1.0) < 1e-6);
}

TEST_CASE("remote embedding through a mock provider") {
  FixedProvider p({2, 0, 0, 0}, 4);
  const auto r = embed_remote("s", {Modality::text, "hello"}, p, 4);
  CHECK(r.embedding.vector == std::vector<double>{1, 0, 0, 0});
  CHECK(r.attempts == 1);
  CHECK(r.embedding.embedder_id == "fixed/d=4");

  FixedProvider wrong({1, 2, 3}, 3);
  CHECK_THROWS_AS(embed_remote("s", {Modality::text, "hello"}, wrong, 4), IntegrityError);
  FixedProvider lying({1, 2, 3, 4}, 8);
  CHECK_THROWS_AS(embed_remote("s", {Modality::text, "hello"}, lying, 4), IntegrityError);

  FixedProvider flaky({2, 0, 0, 0}, 4, 2);
  const auto again = embed_remote("s", {Modality::text, "hello"}, flaky, 4, 2);
  CHECK(again.embedding.vector == r.embedding.vector);
  CHECK(again.attempts == 3);

  FixedProvider down({2, 0, 0, 0}, 4, 10);
  CHECK_THROWS_AS(embed_remote("s", {Modality::text, "hello"}, down, 4, 2), TransportError);
}

TEST_CASE("base64") {
  CHECK(base64_encode("") == "");
  CHECK(base64_encode("f") == "Zg==");
  CHECK(base64_encode("foobar") == "Zm9vYmFy");
  CHECK(base64_encode(std::string("\x89PNG", 4)) == "iVBORw==");
}
