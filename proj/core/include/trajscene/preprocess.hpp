#pragma once

#include <string>
#include <vector>

#include "trajscene/types.hpp"

namespace trajscene {

struct CleaningConfig {
  double max_speed_mps = 83.3;
  double max_gap_s = 1200.0;
  int min_points = 10;
  double min_duration_s = 60.0;

  /// Throws ConfigError on non-positive fields or min_points < 2.
  void validate() const;
};

/// Greedy forward pass: keeps a point only if its timestamp is strictly after
/// the last kept point and the implied speed from that point does not exceed
/// `cfg.max_speed_mps`.
std::vector<GpsPoint> clean(const std::vector<GpsPoint>& points, const CleaningConfig& cfg);

/// Cuts cleaned points into mode-labeled segments, one run per label interval
/// of a supported mode, split again at gaps longer than `cfg.max_gap_s`.
/// Segment ids are `<id_prefix>_<label start as YYYYMMDDhhmmss>_<run index>`.
/// Throws IntegrityError when two label intervals overlap.
std::vector<TrajectorySegment> segment_by_labels(const std::vector<GpsPoint>& points,
                                                 std::vector<LabelInterval> labels,
                                                 const CleaningConfig& cfg,
                                                 const std::string& id_prefix = "seg");

}  // namespace trajscene
