#include "trajscene/narrative.hpp"

#include <cmath>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "trajscene/civil_time.hpp"
#include "trajscene/error.hpp"

namespace trajscene {

std::string_view to_string(TextSource s) {
  return s == TextSource::remote_llm ? "remote_llm" : "deterministic";
}

namespace {

constexpr double kMpsToKmh = 3.6;
constexpr std::size_t kMaxListedPeriods = 3;

std::string hhmm(const CivilTime& t) { return fmt::format("{:02d}:{:02d}", t.hour, t.minute); }

std::string ymd(const CivilTime& t) { return fmt::format("{:04d}-{:02d}-{:02d}", t.year, t.month, t.day); }

std::string time_of_day_phrase(TimeOfDay t) {
  switch (t) {
    case TimeOfDay::morning_peak: return "Morning peak";
    case TimeOfDay::evening_peak: return "Evening peak";
    case TimeOfDay::daytime_offpeak: return "Daytime off-peak";
    case TimeOfDay::night: return "Late evening/night";
  }
  return "Daytime off-peak";
}

std::string time_of_day_clause(TimeOfDay t) {
  switch (t) {
    case TimeOfDay::morning_peak: return "during the morning peak";
    case TimeOfDay::evening_peak: return "during the evening peak";
    case TimeOfDay::daytime_offpeak: return "during daytime off-peak hours";
    case TimeOfDay::night: return "during late evening/night";
  }
  return "during daytime off-peak hours";
}

bool is_peak(TimeOfDay t) { return t == TimeOfDay::morning_peak || t == TimeOfDay::evening_peak; }

std::string detour_phrase(double d) {
  if (d > 2.0) return "a moderately winding route or detour";
  if (d > 1.3) return "a somewhat indirect route";
  return "a largely direct route";
}

std::string speed_band_phrase(double avg_mps, const SpeedBands& bands) {
  if (avg_mps < bands.walking_max) return "consistent with walking";
  if (avg_mps < bands.cycling_max) return "consistent with cycling or slow motorized travel";
  if (avg_mps < bands.urban_max) return "consistent with urban motorized travel";
  return "consistent with fast motorized or rail travel";
}

std::string trip_length_word(double duration_s) {
  if (duration_s < 15 * 60) return "short";
  if (duration_s < 45 * 60) return "medium-length";
  return "long";
}

std::string plural(long n, const char* one, const char* many) {
  return fmt::format("{} {}", n, n == 1 ? one : many);
}

}  // namespace

SceneText render_narrative(const KinematicsReport& report, const SpeedBands& bands,
                           double local_utc_offset_h) {
  const auto& t = report.temporal;
  const auto& d = report.dynamics;
  const CivilTime start_utc = civil_from_utc(t.start_ts);
  const CivilTime end_utc = civil_from_utc(t.end_ts);
  const CivilTime start_local = civil_from_utc(t.start_ts, local_utc_offset_h);
  const CivilTime end_local = civil_from_utc(t.end_ts, local_utc_offset_h);
  const std::string offset = fmt::format("UTC{:+g}", local_utc_offset_h);
  const double minutes = t.duration_s / 60.0;

  SceneText out;
  out.segment_id = report.segment_id;
  out.source = TextSource::deterministic;

  std::string& tb = out.temporal_block;
  tb += std::string(kTemporalHeader) + "\n";
  tb += fmt::format(
      "Start/End Time: The trajectory spans from {:.1f} ({} UTC; local time {} {}) to {:.1f} ({} UTC; "
      "local time {} {}).\n",
      t.start_ts, format_civil(start_utc), hhmm(start_local), offset, t.end_ts,
      format_civil(end_utc), hhmm(end_local), offset);
  tb += fmt::format("Total Duration: ~{:.2f} minutes ({:.0f} seconds).\n", minutes, t.duration_s);
  tb += fmt::format("Day Type: Occurred on a {} ({}, {}).\n", to_string(t.day_type),
                    weekday_name(start_local.weekday), ymd(start_local));
  tb += fmt::format(
      "Time of Day: {} (local time {}-{}), {} peak commuting hours (typically 7-9 AM and 5-7 PM "
      "local time).\n",
      time_of_day_phrase(t.time_of_day), hhmm(start_local), hhmm(end_local),
      is_peak(t.time_of_day) ? "within" : "outside");
  if (t.inactivity_periods.empty()) {
    tb += "Inactivity Periods: None detected.\n";
  } else {
    std::string listed;
    for (std::size_t i = 0; i < t.inactivity_periods.size() && i < kMaxListedPeriods; ++i) {
      const auto& p = t.inactivity_periods[i];
      if (i) listed += ", ";
      listed += fmt::format("{:.1f}-{:.1f} ({:.0f} s)", p.start_ts, p.end_ts, p.duration_s);
    }
    tb += fmt::format("Inactivity Periods: {} detected (e.g., {}).\n",
                      plural(static_cast<long>(t.inactivity_periods.size()), "inactivity period",
                             "inactivity periods"),
                      listed);
  }

  std::string& db = out.dynamics_block;
  db += std::string(kDynamicsHeader) + "\n";
  db += fmt::format(
      "Average Speed: ~{:.1f} km/h ({:.1f} m/s), calculated as total travel distance ({:.0f} meters) "
      "divided by total duration ({:.0f} seconds).\n",
      d.avg_speed_mps * kMpsToKmh, d.avg_speed_mps, d.path_length_m, t.duration_s);
  db += fmt::format(
      "Speed Variation: {:.1f}-{:.1f} km/h across consecutive fixes (standard deviation {:.1f} "
      "km/h).\n",
      d.speed_min_mps * kMpsToKmh, d.speed_max_mps * kMpsToKmh, d.speed_std_mps * kMpsToKmh);
  db += fmt::format("Turn Frequency: {} between consecutive legs.\n",
                    plural(d.sharp_turn_count, "sharp turn", "sharp turns"));
  db += fmt::format("Stops: {} and {}.\n",
                    plural(d.brief_stop_count, "brief stationary period", "brief stationary periods"),
                    plural(d.prolonged_stop_count, "prolonged stop", "prolonged stops"));
  db += fmt::format(
      "Total vs. Straight-Line Distance: Total travel distance ~{:.0f} meters; straight-line distance "
      "~{:.0f} meters.\n",
      d.path_length_m, d.straight_line_m);
  if (d.detour_index) {
    db += fmt::format(
        "Detour Index: ~{:.1f} (actual path length/straight-line distance), indicating {}.\n",
        *d.detour_index, detour_phrase(*d.detour_index));
  } else {
    db += "Detour Index: undefined (the trajectory returns to its starting point).\n";
  }

  std::string& sb = out.summary_block;
  sb += std::string(kSummaryHeader) + "\n";
  sb += fmt::format("This trajectory reflects a {} (~{:.2f}-minute) {} trip {}, {} peak commuting hours. ",
                    trip_length_word(t.duration_s), minutes, to_string(t.day_type),
                    time_of_day_clause(t.time_of_day), is_peak(t.time_of_day) ? "within" : "outside");
  sb += fmt::format("The movement is characterized by an average speed of ~{:.1f} km/h, {}. ",
                    d.avg_speed_mps * kMpsToKmh, speed_band_phrase(d.avg_speed_mps, bands));
  if (d.prolonged_stop_count > 0) {
    sb += fmt::format("It includes {} and {}, suggesting scheduled halts or traffic stops. ",
                      plural(d.prolonged_stop_count, "prolonged stop", "prolonged stops"),
                      plural(d.brief_stop_count, "brief stop", "brief stops"));
  } else if (d.brief_stop_count > 0) {
    sb += fmt::format("It includes {}, likely momentary pauses or GPS noise. ",
                      plural(d.brief_stop_count, "brief stop", "brief stops"));
  }
  if (d.detour_index) {
    sb += fmt::format("The path follows {} (detour index ~{:.1f}).\n", detour_phrase(*d.detour_index),
                      *d.detour_index);
  } else {
    sb += "The path is a closed loop that ends where it started.\n";
  }

  out.full_text = out.temporal_block + out.dynamics_block + out.summary_block;
  return out;
}

ReasonerPrompt build_prompt(const TrajectorySegment& seg, std::size_t point_cap) {
  if (seg.points.size() > point_cap) {
    throw Error(fmt::format(
        "segment {} has {} points, above the prompt cap of {}; downsample before narrating",
        seg.segment_id, seg.points.size(), point_cap));
  }
  ReasonerPrompt p;
  p.system_text =
      "You are an expert in GPS trajectory analysis. Reason carefully over the raw fixes and report "
      "only what the data supports.";
  std::string& u = p.user_text;
  u += "Analyze the following GPS trajectory segment. Each line is one fix as (lon, lat, ts) with ts "
       "in Unix epoch seconds (UTC). Local time is UTC+8 (Beijing).\n\n";
  u += fmt::format("Points ({}):\n", seg.points.size());
  for (const auto& pt : seg.points) u += fmt::format("({:.6f}, {:.6f}, {:.1f})\n", pt.lon, pt.lat, pt.ts);
  u += "\nExtract the following features:\n";
  u += "- Temporal Information: start/end times, duration, inactivity periods (also day type and time "
       "of day)\n";
  u += "- Trajectory Dynamics: speed profiles, turn frequency, detour index (also stops and total vs. "
       "straight-line distance)\n\n";
  u += "Respond using exactly these three sections, in order:\n";
  u += fmt::format("{}\n{}\n{}\n", kTemporalHeader, kDynamicsHeader, kSummaryHeader);
  u += "The last section synthesizes the overall movement pattern and temporal characteristics.\n";
  return p;
}

bool split_sections(std::string_view text, SceneText& out) {
  const auto t = text.find(kTemporalHeader);
  if (t == std::string_view::npos) return false;
  const auto d = text.find(kDynamicsHeader, t + kTemporalHeader.size());
  if (d == std::string_view::npos) return false;
  const auto s = text.find(kSummaryHeader, d + kDynamicsHeader.size());
  if (s == std::string_view::npos) return false;
  out.temporal_block = std::string(text.substr(t, d - t));
  out.dynamics_block = std::string(text.substr(d, s - d));
  out.summary_block = std::string(text.substr(s));
  out.full_text = out.temporal_block + out.dynamics_block + out.summary_block;
  return true;
}

HttpReasonerClient::HttpReasonerClient(remote::EndpointConfig cfg)
    : cfg_(std::move(cfg)), token_(remote::bearer_token(cfg_)) {
  cfg_.validate();
}

std::string HttpReasonerClient::complete(const ReasonerPrompt& prompt) {
  const nlohmann::json req{{"model", cfg_.model_id},
                           {"system_text", prompt.system_text},
                           {"user_text", prompt.user_text}};
  const std::string body = remote::post_json(cfg_, token_, req.dump());
  nlohmann::json resp;
  try {
    resp = nlohmann::json::parse(body);
    return resp.at("completion").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError(std::string("malformed reasoner response: ") + e.what());
  }
}

SceneText remote_narrative(const ReasonerPrompt& prompt, ReasonerClient& client, int retries,
                           double backoff_s) {
  SceneText out;
  const std::string completion =
      remote::with_retries([&] { return client.complete(prompt); }, retries, backoff_s, out.attempts);
  out.source = TextSource::remote_llm;
  if (!split_sections(completion, out)) {
    out.temporal_block.clear();
    out.dynamics_block.clear();
    out.summary_block.clear();
    out.full_text = completion;
    out.degraded = true;
  }
  return out;
}

}  // namespace trajscene
