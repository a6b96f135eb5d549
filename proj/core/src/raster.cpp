#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include <png.h>

#include "trajscene/error.hpp"
#include "trajscene/scene.hpp"

namespace trajscene {

namespace {

struct Rgb {
  std::uint8_t r, g, b;
};

Rgb parse_color(const std::string& hex) {
  if (hex.size() != 7 || hex[0] != '#') throw ConfigError("colors must be #rrggbb, got " + hex);
  const auto v = std::stoul(hex.substr(1), nullptr, 16);
  return {static_cast<std::uint8_t>(v >> 16), static_cast<std::uint8_t>(v >> 8),
          static_cast<std::uint8_t>(v)};
}

class Canvas {
 public:
  explicit Canvas(Raster& r) : r_(r) {}

  void fill(Rgb c) {
    for (std::size_t i = 0; i < r_.rgb.size(); i += 3) set_at(i, c);
  }

  void plot(int x, int y, Rgb c) {
    if (x < 0 || y < 0 || x >= r_.width || y >= r_.height) return;
    set_at((static_cast<std::size_t>(y) * r_.width + x) * 3, c);
  }

  // Pixels whose centers lie within width/2 of the segment.
  void line(Projection::Pixel a, Projection::Pixel b, double width, Rgb c) {
    const double h = std::max(0.5, width / 2.0);
    const int x0 = static_cast<int>(std::floor(std::min(a.x, b.x) - h));
    const int x1 = static_cast<int>(std::ceil(std::max(a.x, b.x) + h));
    const int y0 = static_cast<int>(std::floor(std::min(a.y, b.y) - h));
    const int y1 = static_cast<int>(std::ceil(std::max(a.y, b.y) + h));
    const double dx = b.x - a.x, dy = b.y - a.y;
    const double len2 = dx * dx + dy * dy;
    for (int y = std::max(0, y0); y <= std::min(r_.height - 1, y1); ++y) {
      for (int x = std::max(0, x0); x <= std::min(r_.width - 1, x1); ++x) {
        const double px = x + 0.5, py = y + 0.5;
        double t = len2 > 0 ? ((px - a.x) * dx + (py - a.y) * dy) / len2 : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        const double ex = a.x + t * dx - px, ey = a.y + t * dy - py;
        if (ex * ex + ey * ey <= h * h) plot(x, y, c);
      }
    }
  }

  void disc(Projection::Pixel p, double radius, Rgb c) { line(p, p, 2 * radius, c); }

  void square(Projection::Pixel p, double half, Rgb c) {
    for (int y = static_cast<int>(std::floor(p.y - half)); y < static_cast<int>(std::ceil(p.y + half)); ++y) {
      for (int x = static_cast<int>(std::floor(p.x - half)); x < static_cast<int>(std::ceil(p.x + half)); ++x) {
        plot(x, y, c);
      }
    }
  }

 private:
  void set_at(std::size_t i, Rgb c) {
    r_.rgb[i] = c.r;
    r_.rgb[i + 1] = c.g;
    r_.rgb[i + 2] = c.b;
  }
  Raster& r_;
};

void draw_polyline(Canvas& cv, const Projection& proj, const Polyline& line, double width, Rgb c) {
  for (std::size_t i = 1; i < line.size(); ++i) {
    cv.line(proj.project(line[i - 1].lat, line[i - 1].lon), proj.project(line[i].lat, line[i].lon),
            width, c);
  }
}

void png_append(png_structp png, png_bytep data, png_size_t len) {
  auto* out = static_cast<std::string*>(png_get_io_ptr(png));
  out->append(reinterpret_cast<const char*>(data), len);
}

}  // namespace

Raster rasterize_scene(const TrajectorySegment& seg, const SceneLayers& layers, const BBox& box,
                       const RenderStyle& style) {
  style.validate();
  const Projection proj(box, style.width_px, style.height_px);
  Raster r;
  r.width = style.width_px;
  r.height = style.height_px;
  r.rgb.assign(static_cast<std::size_t>(r.width) * r.height * 3, 0);
  Canvas cv(r);
  cv.fill(parse_color(style.background));

  const Rgb road = parse_color(style.road_color);
  for (const auto& line : layers.roads) draw_polyline(cv, proj, line, style.road_width, road);
  const Rgb subway = parse_color(style.subway_color);
  for (const auto& line : layers.subway_lines) draw_polyline(cv, proj, line, style.subway_width, subway);
  const Rgb bus = parse_color(style.bus_color);
  for (const auto& s : layers.bus_stations) cv.disc(proj.project(s.lat, s.lon), style.bus_radius, bus);

  const Rgb traj = parse_color(style.trajectory_color);
  Polyline track;
  for (const auto& p : seg.points) track.push_back({p.lat, p.lon});
  draw_polyline(cv, proj, track, style.trajectory_width, traj);
  cv.disc(proj.project(track.front().lat, track.front().lon), style.marker_size, traj);
  cv.square(proj.project(track.back().lat, track.back().lon), style.marker_size, traj);
  return r;
}

std::string encode_png(const Raster& raster) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  std::string out;
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, info ? &info : nullptr);
    throw Error("PNG encoding failed");
  }
  png_set_write_fn(png, &out, png_append, nullptr);
  png_set_IHDR(png, info, raster.width, raster.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < raster.height; ++y) {
    png_write_row(png, const_cast<png_bytep>(raster.rgb.data() + static_cast<std::size_t>(y) * raster.width * 3));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

}  // namespace trajscene
