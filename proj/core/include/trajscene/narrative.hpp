#pragma once

#include <string>
#include <string_view>

#include "trajscene/kinematics.hpp"
#include "trajscene/remote.hpp"
#include "trajscene/types.hpp"

namespace trajscene {

inline constexpr std::string_view kTemporalHeader = "1. Temporal Information";
inline constexpr std::string_view kDynamicsHeader = "2. Trajectory Dynamics";
inline constexpr std::string_view kSummaryHeader = "Overall Movement Pattern Summary";

enum class TextSource { deterministic, remote_llm };
std::string_view to_string(TextSource s);

/// Textual modality. `full_text` is the three blocks concatenated in order;
/// each block begins with its section header line.
struct SceneText {
  std::string segment_id;
  std::string temporal_block;
  std::string dynamics_block;
  std::string summary_block;
  TextSource source = TextSource::deterministic;
  std::string full_text;
  bool degraded = false;  // remote completion lacked the expected headers
  int attempts = 0;
};

/// Upper average-speed bounds (m/s) of the summary's speed bands.
struct SpeedBands {
  double walking_max = 2.0;
  double cycling_max = 5.0;
  double urban_max = 12.0;
};

/// Fills the fixed three-part template from a report. Speeds are printed in
/// km/h with one decimal, detour with one decimal, distances to the meter and
/// durations to the second.
SceneText render_narrative(const KinematicsReport& report, const SpeedBands& bands = {},
                           double local_utc_offset_h = 8.0);

struct ReasonerPrompt {
  std::string system_text;
  std::string user_text;
};

/// Builds the request sent to a remote reasoning model: the raw (lon, lat, ts)
/// list plus the feature checklist. Throws Error when the segment exceeds
/// `point_cap` points.
ReasonerPrompt build_prompt(const TrajectorySegment& seg, std::size_t point_cap = 2000);

/// Splits a completion into the three blocks. Returns false (blocks empty)
/// when the headers are missing or out of order.
bool split_sections(std::string_view text, SceneText& out);

class ReasonerClient {
 public:
  virtual ~ReasonerClient() = default;
  /// One attempt. Throws TransportError on failure.
  virtual std::string complete(const ReasonerPrompt& prompt) = 0;
};

/// Talks to `{url}` with request {"model", "system_text", "user_text"} and
/// expects {"completion": "..."} back.
class HttpReasonerClient : public ReasonerClient {
 public:
  explicit HttpReasonerClient(remote::EndpointConfig cfg);
  std::string complete(const ReasonerPrompt& prompt) override;
  const remote::EndpointConfig& config() const { return cfg_; }

 private:
  remote::EndpointConfig cfg_;
  std::string token_;
};

/// Wraps a remote completion into SceneText. A completion without the
/// expected headers is kept verbatim in full_text with `degraded` set.
SceneText remote_narrative(const ReasonerPrompt& prompt, ReasonerClient& client, int retries = 2,
                           double backoff_s = 0.0);

}  // namespace trajscene
