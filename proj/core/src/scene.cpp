#include "trajscene/scene.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "trajscene/error.hpp"
#include "trajscene/geo.hpp"

namespace trajscene {

namespace {

// Box edges in Liang-Barsky order.
enum Edge { kMinLon = 0, kMaxLon, kMinLat, kMaxLat, kNone };

// Liang-Barsky: parametric range [t0, t1] of a->b inside the box, if any, and
// the edges that bound it.
bool clip_segment(const LatLon& a, const LatLon& b, const BBox& box, double& t0, double& t1,
                  Edge& e0, Edge& e1) {
  const double dx = b.lon - a.lon;
  const double dy = b.lat - a.lat;
  t0 = 0.0;
  t1 = 1.0;
  e0 = e1 = kNone;
  const double p[4] = {-dx, dx, -dy, dy};
  const double q[4] = {a.lon - box.min_lon, box.max_lon - a.lon, a.lat - box.min_lat,
                       box.max_lat - a.lat};
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0.0) {
      if (q[i] < 0.0) return false;
      continue;
    }
    const double r = q[i] / p[i];
    if (p[i] < 0.0) {
      if (r > t1) return false;
      if (r > t0) {
        t0 = r;
        e0 = static_cast<Edge>(i);
      }
    } else {
      if (r < t0) return false;
      if (r < t1) {
        t1 = r;
        e1 = static_cast<Edge>(i);
      }
    }
  }
  return t0 <= t1;
}

LatLon lerp(const LatLon& a, const LatLon& b, double t) {
  return {a.lat + t * (b.lat - a.lat), a.lon + t * (b.lon - a.lon)};
}

// Puts an interpolated vertex exactly on the edge it was clipped against and
// clamps away rounding drift on the other axis.
LatLon snap(LatLon p, const BBox& box, Edge edge) {
  p.lat = std::clamp(p.lat, box.min_lat, box.max_lat);
  p.lon = std::clamp(p.lon, box.min_lon, box.max_lon);
  switch (edge) {
    case kMinLon: p.lon = box.min_lon; break;
    case kMaxLon: p.lon = box.max_lon; break;
    case kMinLat: p.lat = box.min_lat; break;
    case kMaxLat: p.lat = box.max_lat; break;
    case kNone: break;
  }
  return p;
}

bool is_road(const osm::Tags& tags) {
  static const std::set<std::string> kRoadClasses = {
      "motorway", "trunk",        "primary", "secondary", "tertiary",
      "residential", "unclassified", "service", "footway", "cycleway"};
  const auto it = tags.find("highway");
  if (it == tags.end()) return false;
  std::string v = it->second;
  if (v.size() > 5 && v.ends_with("_link")) v.resize(v.size() - 5);
  return kRoadClasses.count(v) > 0;
}

bool has_tag(const osm::Tags& tags, const std::string& k, const std::string& v) {
  const auto it = tags.find(k);
  return it != tags.end() && it->second == v;
}

Polyline way_geometry(const osm::Extract& ex, const osm::Way& w) {
  Polyline line;
  line.reserve(w.node_ids.size());
  for (auto id : w.node_ids) {
    const auto& n = ex.nodes.at(id);
    line.push_back({n.lat, n.lon});
  }
  return line;
}

void append_clipped(std::vector<Polyline>& out, const Polyline& line, const BBox& box) {
  for (auto& piece : clip_polyline(line, box)) out.push_back(std::move(piece));
}

}  // namespace

std::vector<Polyline> clip_polyline(const Polyline& line, const BBox& box) {
  std::vector<Polyline> pieces;
  Polyline current;
  auto flush = [&] {
    if (current.size() >= 2) pieces.push_back(std::move(current));
    current.clear();
  };
  for (std::size_t i = 1; i < line.size(); ++i) {
    const LatLon& a = line[i - 1];
    const LatLon& b = line[i];
    double t0, t1;
    Edge e0, e1;
    if (!clip_segment(a, b, box, t0, t1, e0, e1)) {
      flush();
      continue;
    }
    const LatLon pa = t0 > 0.0 ? snap(lerp(a, b, t0), box, e0) : a;
    const LatLon pb = t1 < 1.0 ? snap(lerp(a, b, t1), box, e1) : b;
    if (t0 > 0.0) flush();
    if (current.empty()) current.push_back(pa);
    current.push_back(pb);
    if (t1 < 1.0) flush();
  }
  flush();
  return pieces;
}

SceneLayers extract_layers(const osm::Extract& osm, const BBox& box) {
  SceneLayers layers;
  std::set<std::int64_t> subway_ways;
  for (const auto& [id, way] : osm.ways) {
    if (has_tag(way.tags, "railway", "subway")) subway_ways.insert(id);
  }
  for (const auto& [id, rel] : osm.relations) {
    if (!has_tag(rel.tags, "route", "subway")) continue;
    for (const auto& m : rel.members) {
      if (m.type == "way" && osm.ways.count(m.ref)) subway_ways.insert(m.ref);
    }
  }
  for (const auto& [id, way] : osm.ways) {
    if (is_road(way.tags)) append_clipped(layers.roads, way_geometry(osm, way), box);
  }
  for (auto id : subway_ways) {
    append_clipped(layers.subway_lines, way_geometry(osm, osm.ways.at(id)), box);
  }
  for (const auto& [id, node] : osm.nodes) {
    const bool stop = has_tag(node.tags, "highway", "bus_stop") ||
                      (has_tag(node.tags, "public_transport", "platform") &&
                       has_tag(node.tags, "bus", "yes"));
    if (stop && box.contains(node.lat, node.lon)) layers.bus_stations.push_back({node.lat, node.lon});
  }
  return layers;
}

BBox scene_bbox(const TrajectorySegment& seg, double buffer_frac) {
  if (!(buffer_frac > 0.0)) throw ConfigError("render.buffer_frac must be > 0");
  if (seg.points.empty()) throw IntegrityError("cannot frame an empty segment");
  BBox b{seg.points[0].lon, seg.points[0].lat, seg.points[0].lon, seg.points[0].lat};
  for (const auto& p : seg.points) {
    b.min_lon = std::min(b.min_lon, p.lon);
    b.max_lon = std::max(b.max_lon, p.lon);
    b.min_lat = std::min(b.min_lat, p.lat);
    b.max_lat = std::max(b.max_lat, p.lat);
  }
  if (b.width() == 0.0) {
    b.min_lon -= kMinExtentDeg / 2.0;
    b.max_lon += kMinExtentDeg / 2.0;
  }
  if (b.height() == 0.0) {
    b.min_lat -= kMinExtentDeg / 2.0;
    b.max_lat += kMinExtentDeg / 2.0;
  }
  const double bx = b.width() * buffer_frac;
  const double by = b.height() * buffer_frac;
  b.min_lon -= bx;
  b.max_lon += bx;
  b.min_lat -= by;
  b.max_lat += by;
  return b;
}

void RenderStyle::validate() const {
  if (width_px <= 0 || height_px <= 0) throw ConfigError("render canvas size must be positive");
  if (road_width <= 0 || subway_width <= 0 || trajectory_width <= 0 || bus_radius <= 0 ||
      marker_size <= 0) {
    throw ConfigError("render stroke widths and marker sizes must be positive");
  }
  if (style_version.empty()) throw ConfigError("render.style_version must not be empty");
}

Projection::Projection(const BBox& box, int width_px, int height_px) : box_(box) {
  if (!(box.width() > 0.0) || !(box.height() > 0.0)) {
    throw ConfigError("cannot project a zero-area bounding box");
  }
  lon_factor_ = std::cos(geo::deg2rad((box.min_lat + box.max_lat) / 2.0));
  const double world_w = box.width() * lon_factor_;
  const double world_h = box.height();
  scale_ = std::min(width_px / world_w, height_px / world_h);
  offset_x_ = (width_px - world_w * scale_) / 2.0;
  offset_y_ = (height_px - world_h * scale_) / 2.0;
}

Projection::Pixel Projection::project(double lat, double lon) const {
  return {offset_x_ + (lon - box_.min_lon) * lon_factor_ * scale_,
          offset_y_ + (box_.max_lat - lat) * scale_};
}

LatLon Projection::unproject(Pixel px) const {
  return {box_.max_lat - (px.y - offset_y_) / scale_,
          box_.min_lon + (px.x - offset_x_) / (lon_factor_ * scale_)};
}

namespace {

std::string points_attr(const Projection& proj, const Polyline& line) {
  std::string s;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const auto px = proj.project(line[i].lat, line[i].lon);
    if (i) s += ' ';
    s += fmt::format("{:.2f},{:.2f}", px.x, px.y);
  }
  return s;
}

}  // namespace

SceneImage render_scene(const TrajectorySegment& seg, const SceneLayers& layers, const BBox& box,
                        const RenderStyle& style, bool with_raster) {
  style.validate();
  if (seg.points.size() < 2) throw IntegrityError("cannot render a segment with fewer than 2 points");
  const Projection proj(box, style.width_px, style.height_px);

  SceneImage img;
  img.width_px = style.width_px;
  img.height_px = style.height_px;
  img.bbox = box;
  img.style_version = style.style_version;

  std::string& doc = img.vector_doc;
  doc += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  doc += fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{0}\" height=\"{1}\" "
      "viewBox=\"0 0 {0} {1}\" data-style-version=\"{2}\" "
      "data-bbox=\"{3:.7f},{4:.7f},{5:.7f},{6:.7f}\">\n",
      style.width_px, style.height_px, style.style_version, box.min_lon, box.min_lat, box.max_lon,
      box.max_lat);
  doc += fmt::format("  <rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"{}\"/>\n",
                     style.width_px, style.height_px, style.background);

  doc += fmt::format(
      "  <g id=\"roads\" fill=\"none\" stroke=\"{}\" stroke-width=\"{}\" stroke-linejoin=\"round\">\n",
      style.road_color, style.road_width);
  for (const auto& road : layers.roads) {
    doc += "    <polyline points=\"" + points_attr(proj, road) + "\"/>\n";
  }
  doc += "  </g>\n";

  doc += fmt::format(
      "  <g id=\"subway_lines\" fill=\"none\" stroke=\"{}\" stroke-width=\"{}\" "
      "stroke-linejoin=\"round\">\n",
      style.subway_color, style.subway_width);
  for (const auto& line : layers.subway_lines) {
    doc += "    <polyline points=\"" + points_attr(proj, line) + "\"/>\n";
  }
  doc += "  </g>\n";

  doc += fmt::format("  <g id=\"bus_stations\" fill=\"{}\" stroke=\"none\">\n", style.bus_color);
  for (const auto& stop : layers.bus_stations) {
    const auto px = proj.project(stop.lat, stop.lon);
    doc += fmt::format("    <circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"{}\"/>\n", px.x, px.y,
                       style.bus_radius);
  }
  doc += "  </g>\n";

  Polyline track;
  track.reserve(seg.points.size());
  for (const auto& p : seg.points) track.push_back({p.lat, p.lon});
  for (std::size_t i = 1; i < track.size(); ++i) {
    const auto a = proj.project(track[i - 1].lat, track[i - 1].lon);
    const auto b = proj.project(track[i].lat, track[i].lon);
    img.trajectory_px_length += std::hypot(b.x - a.x, b.y - a.y);
  }
  const auto start = proj.project(track.front().lat, track.front().lon);
  const auto end = proj.project(track.back().lat, track.back().lon);
  doc += "  <g id=\"trajectory\">\n";
  doc += fmt::format(
      "    <polyline fill=\"none\" stroke=\"{}\" stroke-width=\"{}\" stroke-linejoin=\"round\" "
      "points=\"{}\"/>\n",
      style.trajectory_color, style.trajectory_width, points_attr(proj, track));
  doc += fmt::format("    <circle id=\"start\" cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"{}\" fill=\"{}\"/>\n",
                     start.x, start.y, style.marker_size, style.trajectory_color);
  doc += fmt::format(
      "    <rect id=\"end\" x=\"{:.2f}\" y=\"{:.2f}\" width=\"{}\" height=\"{}\" fill=\"{}\"/>\n",
      end.x - style.marker_size, end.y - style.marker_size, 2 * style.marker_size,
      2 * style.marker_size, style.trajectory_color);
  doc += "  </g>\n</svg>\n";

  if (with_raster) img.raster = rasterize_scene(seg, layers, box, style);
  return img;
}

}  // namespace trajscene
