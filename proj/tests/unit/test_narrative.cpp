#include <regex>
#include <string>

#include <doctest.h>
#include <fmt/format.h>

#include "support.hpp"
#include "trajscene/error.hpp"
#include "trajscene/kinematics.hpp"
#include "trajscene/narrative.hpp"

using namespace trajscene;
using namespace trajscene::testing;

namespace {

KinematicsReport sample_report() {
  KinematicsReport r;
  r.segment_id = "r";
  r.temporal.start_ts = 1236505098.0;
  r.temporal.end_ts = 1236505743.0;
  r.temporal.duration_s = 645.0;
  r.temporal.day_type = DayType::weekend;
  r.temporal.time_of_day = TimeOfDay::evening_peak;
  r.temporal.inactivity_periods = {{1236505200.0, 1236505205.0, 5.0}};
  auto& d = r.dynamics;
  d.avg_speed_mps = 3.1;
  d.speed_min_mps = 1.4;
  d.speed_max_mps = 8.1;
  d.speed_std_mps = 1.2;
  d.sharp_turn_count = 2;
  d.brief_stop_count = 1;
  d.path_length_m = 2000.0;
  d.straight_line_m = 687.0;
  d.detour_index = 2000.0 / 687.0;
  return r;
}

bool contains(const std::string& s, const std::string& needle) { return s.find(needle) != std::string::npos; }

double capture(const std::string& text, const std::string& pattern) {
  std::smatch m;
  REQUIRE(std::regex_search(text, m, std::regex(pattern)));
  return std::stod(m[1].str());
}

class ScriptedReasoner : public ReasonerClient {
 public:
  ScriptedReasoner(std::string reply, int failures, bool retryable = true)
      : reply_(std::move(reply)), failures_(failures), retryable_(retryable) {}
  std::string complete(const ReasonerPrompt&) override {
    ++calls;
    if (calls <= failures_) throw TransportError("timed out", 1, retryable_);
    return reply_;
  }
  int calls = 0;

 private:
  std::string reply_;
  int failures_;
  bool retryable_;
};

}  // namespace

TEST_CASE("narrative layout") {
  const SceneText t = render_narrative(sample_report());
  CHECK(t.source == TextSource::deterministic);
  CHECK(t.full_text == t.temporal_block + t.dynamics_block + t.summary_block);
  CHECK(t.temporal_block.starts_with(kTemporalHeader));
  CHECK(t.dynamics_block.starts_with(kDynamicsHeader));
  CHECK(t.summary_block.starts_with(kSummaryHeader));
  CHECK(contains(t.dynamics_block, "Detour Index: ~2.9"));
  CHECK(contains(t.summary_block, "moderately winding route or detour"));
  CHECK(contains(t.summary_block, "consistent with cycling or slow motorized travel"));
  CHECK(contains(t.temporal_block, "weekend"));
  CHECK(contains(t.temporal_block, "Sunday, 2009-03-08"));
  CHECK(contains(t.temporal_block, "local time 17:38"));

  SceneText parsed;
  REQUIRE(split_sections(t.full_text, parsed));
  CHECK(parsed.temporal_block == t.temporal_block);
  CHECK(parsed.dynamics_block == t.dynamics_block);
  CHECK(parsed.summary_block == t.summary_block);
}

TEST_CASE("narrative for a two-point straight segment") {
  const auto seg = make_segment({pt(39.9, 116.3, 1.2e9), pt(39.9, 116.31, 1.2e9 + 100)});
  const SceneText t = render_narrative(analyze(seg));
  CHECK(contains(t.dynamics_block, "Detour Index: ~1.0"));
  CHECK_FALSE(contains(t.summary_block, "It includes"));
  CHECK(contains(t.summary_block, "largely direct route"));
}

TEST_CASE("narrative mentions a prolonged stop") {
  auto r = sample_report();
  r.dynamics.prolonged_stop_count = 1;
  r.temporal.inactivity_periods.push_back({1236505300.0, 1236505330.0, 30.0});
  const SceneText t = render_narrative(r);
  CHECK(contains(t.summary_block, "1 prolonged stop"));
  CHECK(contains(t.dynamics_block, "1 prolonged stop"));
}

TEST_CASE("speed bands") {
  auto r = sample_report();
  const std::pair<double, const char*> cases[] = {
      {1.5, "consistent with walking"},
      {4.9, "consistent with cycling or slow motorized travel"},
      {7.0, "consistent with urban motorized travel"},
      {15.0, "consistent with fast motorized or rail travel"}};
  for (const auto& [speed, phrase] : cases) {
    r.dynamics.avg_speed_mps = speed;
    CHECK(contains(render_narrative(r).summary_block, phrase));
  }
  SpeedBands shifted;
  shifted.walking_max = 2.0;
  shifted.cycling_max = 3.0;
  r.dynamics.avg_speed_mps = 4.0;
  CHECK(contains(render_narrative(r, shifted).summary_block, "urban motorized"));
}

TEST_CASE("printed numbers match the report after rounding") {
  const auto r = analyze(detour_fixture());
  const std::string text = render_narrative(r).full_text;
  CHECK(capture(text, R"(Average Speed: ~([0-9.]+) km/h)") ==
        std::stod(fmt::format("{:.1f}", r.dynamics.avg_speed_mps * 3.6)));
  CHECK(capture(text, R"(Detour Index: ~([0-9.]+))") == std::stod(fmt::format("{:.1f}", *r.dynamics.detour_index)));
  CHECK(capture(text, R"(Total travel distance ~([0-9]+) meters)") == std::round(r.dynamics.path_length_m));
  CHECK(capture(text, R"(straight-line distance ~([0-9]+) meters)") == std::round(r.dynamics.straight_line_m));
  CHECK(capture(text, R"(\(([0-9]+) seconds\))") == std::round(r.temporal.duration_s));
  CHECK(capture(text, R"(Turn Frequency: ([0-9]+) sharp)") == r.dynamics.sharp_turn_count);
}

TEST_CASE("rendered fields are distinguishable") {
  const auto base = sample_report();
  const std::string ref = render_narrative(base).full_text;
  auto changed = [&](auto mutate) {
    auto r = base;
    mutate(r);
    return render_narrative(r).full_text != ref;
  };
  CHECK(changed([](KinematicsReport& r) { r.dynamics.avg_speed_mps = 3.3; }));
  CHECK(changed([](KinematicsReport& r) { r.dynamics.speed_min_mps = 2.0; }));
  CHECK(changed([](KinematicsReport& r) { r.dynamics.speed_max_mps = 9.0; }));
  CHECK(changed([](KinematicsReport& r) { r.dynamics.speed_std_mps = 2.0; }));
  CHECK(changed([](KinematicsReport& r) { r.dynamics.sharp_turn_count = 3; }));
  CHECK(changed([](KinematicsReport& r) { r.dynamics.brief_stop_count = 2; }));
  CHECK(changed([](KinematicsReport& r) { r.dynamics.prolonged_stop_count = 1; }));
  CHECK(changed([](KinematicsReport& r) { r.dynamics.path_length_m = 2010; }));
  CHECK(changed([](KinematicsReport& r) { r.dynamics.straight_line_m = 700; }));
  CHECK(changed([](KinematicsReport& r) { r.dynamics.detour_index = 2.5; }));
  CHECK(changed([](KinematicsReport& r) { r.temporal.duration_s = 700; }));
  CHECK(changed([](KinematicsReport& r) { r.temporal.start_ts += 60; }));
  CHECK(changed([](KinematicsReport& r) { r.temporal.day_type = DayType::weekday; }));
  CHECK(changed([](KinematicsReport& r) { r.temporal.time_of_day = TimeOfDay::night; }));
  CHECK(changed([](KinematicsReport& r) { r.temporal.inactivity_periods.clear(); }));
}

TEST_CASE("reasoner prompt") {
  std::vector<GpsPoint> pts;
  for (int i = 0; i < 10; ++i) pts.push_back(pt(39.9 + 0.001 * i, 116.3 + 0.002 * i, 1.2e9 + 10 * i));
  const auto seg = make_segment(pts);
  const auto p = build_prompt(seg);
  for (const auto& q : pts) {
    const std::string triple = fmt::format("({:.6f}, {:.6f}, {:.1f})", q.lon, q.lat, q.ts);
    const auto first = p.user_text.find(triple);
    REQUIRE(first != std::string::npos);
    CHECK(p.user_text.find(triple, first + 1) == std::string::npos);
  }
  std::size_t triples = 0;
  for (auto pos = p.user_text.find("\n(116."); pos != std::string::npos; pos = p.user_text.find("\n(116.", pos + 1)) {
    ++triples;
  }
  CHECK(triples == 10);
  for (const char* feature : {"start/end times", "duration", "inactivity periods", "speed profiles",
                              "turn frequency", "detour index"}) {
    CHECK(contains(p.user_text, feature));
  }
  CHECK(build_prompt(seg).user_text == p.user_text);
  CHECK(build_prompt(seg).system_text == p.system_text);

  std::vector<GpsPoint> many;
  for (int i = 0; i < 2001; ++i) many.push_back(pt(39.9, 116.3 + 1e-5 * i, 1.2e9 + i));
  CHECK_THROWS_AS(build_prompt(make_segment(many), 2000), Error);
  many.pop_back();
  CHECK_NOTHROW(build_prompt(make_segment(many), 2000));
}

TEST_CASE("remote narrative wraps completions") {
  const ReasonerPrompt prompt = build_prompt(detour_fixture());
  const std::string shaped = render_narrative(sample_report()).full_text;

  ScriptedReasoner good("Here is the analysis.\n" + shaped, 0);
  const SceneText ok = remote_narrative(prompt, good);
  CHECK(ok.source == TextSource::remote_llm);
  CHECK_FALSE(ok.degraded);
  CHECK(ok.temporal_block.starts_with(kTemporalHeader));
  CHECK_FALSE(ok.dynamics_block.empty());
  CHECK_FALSE(ok.summary_block.empty());
  CHECK(ok.attempts == 1);

  ScriptedReasoner loose("The traveller probably took a bus.", 0);
  const SceneText degraded = remote_narrative(prompt, loose);
  CHECK(degraded.degraded);
  CHECK(degraded.full_text == "The traveller probably took a bus.");
  CHECK(degraded.temporal_block.empty());
  CHECK(degraded.summary_block.empty());

  ScriptedReasoner flaky(shaped, 2);
  const SceneText retried = remote_narrative(prompt, flaky, 2);
  CHECK(retried.attempts == 3);
  CHECK(retried.full_text == shaped);

  ScriptedReasoner down(shaped, 100);
  try {
    remote_narrative(prompt, down, 2);
    FAIL("expected a transport error");
  } catch (const TransportError& e) {
    CHECK(e.attempts() == 3);
    CHECK(down.calls == 3);
  }

  ScriptedReasoner denied(shaped, 100, false);
  try {
    remote_narrative(prompt, denied, 5);
    FAIL("expected a transport error");
  } catch (const TransportError& e) {
    CHECK(e.attempts() == 1);
  }
}
