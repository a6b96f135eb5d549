#include "trajscene/preprocess.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "trajscene/civil_time.hpp"
#include "trajscene/error.hpp"
#include "trajscene/geo.hpp"

namespace trajscene {

void CleaningConfig::validate() const {
  if (!(max_speed_mps > 0.0)) throw ConfigError("cleaning.max_speed_mps must be > 0");
  if (!(max_gap_s > 0.0)) throw ConfigError("cleaning.max_gap_s must be > 0");
  if (min_points < 2) throw ConfigError("cleaning.min_points must be >= 2");
  if (!(min_duration_s > 0.0)) throw ConfigError("cleaning.min_duration_s must be > 0");
}

std::vector<GpsPoint> clean(const std::vector<GpsPoint>& points, const CleaningConfig& cfg) {
  std::vector<GpsPoint> out;
  out.reserve(points.size());
  for (const auto& p : points) {
    if (out.empty()) {
      out.push_back(p);
      continue;
    }
    const GpsPoint& last = out.back();
    const double dt = p.ts - last.ts;
    if (!(dt > 0.0)) continue;
    if (geo::haversine_m(last, p) / dt > cfg.max_speed_mps) continue;
    out.push_back(p);
  }
  return out;
}

namespace {

std::string label_stamp(double ts) {
  const CivilTime t = civil_from_utc(ts);
  return fmt::format("{:04d}{:02d}{:02d}{:02d}{:02d}{:02d}", t.year, t.month, t.day, t.hour,
                     t.minute, static_cast<int>(t.second));
}

}  // namespace

std::vector<TrajectorySegment> segment_by_labels(const std::vector<GpsPoint>& points,
                                                 std::vector<LabelInterval> labels,
                                                 const CleaningConfig& cfg,
                                                 const std::string& id_prefix) {
  std::sort(labels.begin(), labels.end(), [](const LabelInterval& a, const LabelInterval& b) {
    if (a.start_ts != b.start_ts) return a.start_ts < b.start_ts;
    if (a.end_ts != b.end_ts) return a.end_ts < b.end_ts;
    return a.raw_mode < b.raw_mode;
  });
  for (std::size_t i = 1; i < labels.size(); ++i) {
    if (labels[i].start_ts < labels[i - 1].end_ts) {
      throw IntegrityError(fmt::format("overlapping label intervals: [{}, {}] {} and [{}, {}] {}",
                                       label_stamp(labels[i - 1].start_ts),
                                       label_stamp(labels[i - 1].end_ts), labels[i - 1].raw_mode,
                                       label_stamp(labels[i].start_ts),
                                       label_stamp(labels[i].end_ts), labels[i].raw_mode));
    }
  }

  auto by_ts = [](const GpsPoint& p, double ts) { return p.ts < ts; };
  std::vector<TrajectorySegment> out;
  for (const auto& label : labels) {
    const auto mode = normalize_mode(label.raw_mode);
    if (!mode) continue;
    auto first = std::lower_bound(points.begin(), points.end(), label.start_ts, by_ts);
    auto last = first;
    while (last != points.end() && last->ts <= label.end_ts) ++last;

    int run_index = 0;
    auto emit = [&](std::vector<GpsPoint> run) {
      if (static_cast<int>(run.size()) < cfg.min_points) return;
      if (run.back().ts - run.front().ts < cfg.min_duration_s) return;
      TrajectorySegment seg;
      seg.segment_id = fmt::format("{}_{}_{}", id_prefix, label_stamp(label.start_ts), run_index++);
      seg.points = std::move(run);
      seg.mode = mode;
      out.push_back(std::move(seg));
    };

    std::vector<GpsPoint> run;
    for (auto it = first; it != last; ++it) {
      if (!run.empty() && it->ts - run.back().ts > cfg.max_gap_s) {
        emit(std::move(run));
        run.clear();
      }
      run.push_back(*it);
    }
    if (!run.empty()) emit(std::move(run));
  }
  return out;
}

}  // namespace trajscene
