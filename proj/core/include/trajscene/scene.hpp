#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "trajscene/osm.hpp"
#include "trajscene/types.hpp"

namespace trajscene {

/// Geographic vertex, degrees.
struct LatLon {
  double lat = 0.0;
  double lon = 0.0;

  friend bool operator==(const LatLon&, const LatLon&) = default;
};

using Polyline = std::vector<LatLon>;

struct BBox {
  double min_lon = 0.0;
  double min_lat = 0.0;
  double max_lon = 0.0;
  double max_lat = 0.0;

  double width() const { return max_lon - min_lon; }
  double height() const { return max_lat - min_lat; }
  bool contains(double lat, double lon) const {
    return lon >= min_lon && lon <= max_lon && lat >= min_lat && lat <= max_lat;
  }
  bool contains(const BBox& o) const {
    return o.min_lon >= min_lon && o.max_lon <= max_lon && o.min_lat >= min_lat &&
           o.max_lat <= max_lat;
  }
  friend bool operator==(const BBox&, const BBox&) = default;
};

struct SceneLayers {
  std::vector<Polyline> roads;
  std::vector<Polyline> subway_lines;
  std::vector<LatLon> bus_stations;
};

/// Clips a polyline to `box`. The result may be split into several pieces
/// where the line leaves and re-enters the box; new vertices lie on box edges.
std::vector<Polyline> clip_polyline(const Polyline& line, const BBox& box);

/// Roads, subway lines and bus stations falling inside `box`.
SceneLayers extract_layers(const osm::Extract& osm, const BBox& box);

/// Minimum extent, in degrees, of a degenerate axis before buffering.
inline constexpr double kMinExtentDeg = 0.001;

/// Segment extent expanded by `buffer_frac` of its width/height on each side.
/// Throws ConfigError if buffer_frac <= 0.
BBox scene_bbox(const TrajectorySegment& seg, double buffer_frac = 0.2);

struct RenderStyle {
  std::string style_version = "trajscene-style-1";
  int width_px = 768;
  int height_px = 768;
  std::string background = "#ffffff";
  std::string road_color = "#9e9e9e";
  double road_width = 1.0;
  std::string subway_color = "#1f4fd1";
  double subway_width = 2.0;
  std::string bus_color = "#1a9e3a";
  double bus_radius = 3.0;
  std::string trajectory_color = "#ff0000";
  double trajectory_width = 2.0;
  double marker_size = 4.0;

  void validate() const;
};

/// Maps bbox coordinates onto the canvas with an equirectangular projection.
/// Longitudes are scaled by cos(mid latitude); the drawing keeps its aspect
/// ratio and is centered on the canvas.
class Projection {
 public:
  Projection(const BBox& box, int width_px, int height_px);

  struct Pixel {
    double x = 0.0;
    double y = 0.0;
  };
  Pixel project(double lat, double lon) const;
  LatLon unproject(Pixel px) const;
  double scale() const { return scale_; }

 private:
  BBox box_;
  double lon_factor_;
  double scale_;
  double offset_x_;
  double offset_y_;
};

/// RGB image, row-major, 3 bytes per pixel.
struct Raster {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;
};

struct SceneImage {
  int width_px = 0;
  int height_px = 0;
  BBox bbox;
  std::string vector_doc;  // SVG
  std::optional<Raster> raster;
  std::string style_version;
  double trajectory_px_length = 0.0;
};

/// Draws roads, subway lines, bus stations and finally the trajectory (with a
/// circular start marker and square end marker) as an SVG document. The output
/// is byte-identical for identical inputs. Throws ConfigError on a zero-area bbox.
SceneImage render_scene(const TrajectorySegment& seg, const SceneLayers& layers, const BBox& box,
                        const RenderStyle& style = {}, bool with_raster = false);

/// Rasterizes the same drawing as render_scene.
Raster rasterize_scene(const TrajectorySegment& seg, const SceneLayers& layers, const BBox& box,
                       const RenderStyle& style);

std::string encode_png(const Raster& raster);

/// Sidecar record stored next to each rendered scene.
struct SceneSidecar {
  std::string segment_id;
  BBox bbox;
  std::string style_version;
  int width_px = 0;
  int height_px = 0;
  double trajectory_px_length = 0.0;
};

}  // namespace trajscene
