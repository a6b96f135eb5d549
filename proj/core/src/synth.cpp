#include "trajscene/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <fmt/format.h>

#include "trajscene/error.hpp"
#include "trajscene/geo.hpp"

namespace trajscene {

const ModeProfile& SynthConfig::profile(ModeLabel mode) const {
  switch (mode) {
    case ModeLabel::walk: return walk;
    case ModeLabel::bike: return bike;
    case ModeLabel::bus: return bus;
    case ModeLabel::car: return car;
    case ModeLabel::subway: return subway;
  }
  throw ConfigError("unknown mode");
}

namespace {

struct XY {
  double x = 0.0;
  double y = 0.0;
};

double dist(XY a, XY b) { return std::hypot(a.x - b.x, a.y - b.y); }

double round7(double v) { return std::round(v * 1e7) / 1e7; }

/// Flat-earth mapping from city meters to lat/lon around the south-west corner.
class CityFrame {
 public:
  explicit CityFrame(const SynthConfig& cfg)
      : lat0_(cfg.origin_lat),
        lon0_(cfg.origin_lon),
        m_per_deg_lat_(geo::kEarthRadiusM * std::numbers::pi / 180.0),
        m_per_deg_lon_(m_per_deg_lat_ * std::cos(geo::deg2rad(cfg.origin_lat))) {}

  double lat(double y) const { return lat0_ + y / m_per_deg_lat_; }
  double lon(double x) const { return lon0_ + x / m_per_deg_lon_; }

 private:
  double lat0_;
  double lon0_;
  double m_per_deg_lat_;
  double m_per_deg_lon_;
};

struct SubwayLine {
  std::vector<XY> vertices;
  std::vector<double> station_s;  // stations as arc-length positions
  double length = 0.0;
};

XY along(const std::vector<XY>& path, double s) {
  for (std::size_t i = 1; i < path.size(); ++i) {
    const double d = dist(path[i - 1], path[i]);
    if (s <= d || i + 1 == path.size()) {
      const double t = d > 0.0 ? std::clamp(s / d, 0.0, 1.0) : 0.0;
      return {path[i - 1].x + t * (path[i].x - path[i - 1].x), path[i - 1].y + t * (path[i].y - path[i - 1].y)};
    }
    s -= d;
  }
  return path.back();
}

std::vector<SubwayLine> subway_lines(const SynthConfig& cfg) {
  const double size = cfg.city_size_m;
  const double half_block = cfg.block_m / 2.0;
  const double margin = 2.0 * cfg.block_m;
  std::vector<SubwayLine> lines{
      {{{margin, size / 3.0 + half_block}, {size - margin, size / 3.0 + half_block}}, {}, 0.0},
      {{{size / 2.0 + half_block, margin}, {size / 2.0 + half_block, size - margin}}, {}, 0.0},
      {{{margin, margin}, {size * 0.55, size * 0.45}, {size - margin, size * 0.75}}, {}, 0.0},
  };
  for (auto& l : lines) {
    for (std::size_t i = 1; i < l.vertices.size(); ++i) l.length += dist(l.vertices[i - 1], l.vertices[i]);
    for (double s = 0.0; s <= l.length + 1e-9; s += cfg.subway_station_spacing_m) l.station_s.push_back(s);
  }
  return lines;
}

osm::Extract build_city(const SynthConfig& cfg, const CityFrame& frame, const std::vector<SubwayLine>& lines) {
  osm::Extract ex;
  std::int64_t next_node = 1;
  std::int64_t next_way = 1;
  auto add_node = [&](XY p, osm::Tags tags = {}) {
    const auto id = next_node++;
    ex.nodes[id] = {round7(frame.lat(p.y)), round7(frame.lon(p.x)), std::move(tags)};
    return id;
  };

  const int n = static_cast<int>(std::floor(cfg.city_size_m / cfg.block_m)) + 1;
  std::vector<std::int64_t> grid(static_cast<std::size_t>(n * n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) grid[static_cast<std::size_t>(i * n + j)] = add_node({i * cfg.block_m, j * cfg.block_m});
  }
  for (int k = 0; k < n; ++k) {
    const bool arterial = k % cfg.arterial_every == 0;
    const osm::Tags tags{{"highway", arterial ? "primary" : "residential"}};
    osm::Way horizontal{{}, tags};
    osm::Way vertical{{}, tags};
    for (int m = 0; m < n; ++m) {
      horizontal.node_ids.push_back(grid[static_cast<std::size_t>(m * n + k)]);
      vertical.node_ids.push_back(grid[static_cast<std::size_t>(k * n + m)]);
    }
    ex.ways[next_way++] = std::move(horizontal);
    ex.ways[next_way++] = std::move(vertical);
  }

  // Bus stops sit mid-block on arterials, slightly off the centerline. Half
  // use the legacy tag and half the platform scheme.
  int stop_index = 0;
  const double first = cfg.block_m / 2.0;
  for (int k = 0; k < n; k += cfg.arterial_every) {
    for (double s = first; s < cfg.city_size_m; s += cfg.bus_stop_spacing_m) {
      for (const XY p : {XY{s, k * cfg.block_m + 8.0}, XY{k * cfg.block_m + 8.0, s}}) {
        osm::Tags tags = (stop_index++ % 2 == 0)
                             ? osm::Tags{{"highway", "bus_stop"}}
                             : osm::Tags{{"public_transport", "platform"}, {"bus", "yes"}};
        add_node(p, std::move(tags));
      }
    }
  }

  // The first two lines are tagged directly; the third is reachable only
  // through a route relation.
  osm::Relation route{{}, {{"type", "route"}, {"route", "subway"}, {"name", "Line 3"}}};
  for (std::size_t li = 0; li < lines.size(); ++li) {
    const auto& line = lines[li];
    osm::Way way;
    constexpr double kStep = 200.0;
    std::vector<double> marks;
    for (double s = 0.0; s < line.length; s += kStep) marks.push_back(s);
    double acc = 0.0;
    for (std::size_t i = 1; i < line.vertices.size(); ++i) {
      acc += dist(line.vertices[i - 1], line.vertices[i]);
      marks.push_back(acc);
    }
    std::sort(marks.begin(), marks.end());
    marks.erase(std::unique(marks.begin(), marks.end(), [](double a, double b) { return b - a < 1e-6; }),
                marks.end());
    for (double s : marks) way.node_ids.push_back(add_node(along(line.vertices, s)));
    for (double s : line.station_s) {
      add_node(along(line.vertices, s), {{"railway", "station"}, {"station", "subway"}});
    }
    const auto id = next_way++;
    if (li + 1 < lines.size()) {
      way.tags = {{"railway", "subway"}, {"name", fmt::format("Line {}", li + 1)}};
    } else {
      way.tags = {{"name", "Line 3 track"}};
      route.members.push_back({"way", id, ""});
    }
    ex.ways[id] = std::move(way);
  }
  ex.relations[1] = std::move(route);
  return ex;
}

/// A route to follow plus the arc-length positions where the vehicle dwells.
struct Route {
  std::vector<XY> path;
  std::vector<double> dwell_s;
};

enum class RoadUse { any, arterial, minor };

RoadUse road_use(ModeLabel mode) {
  switch (mode) {
    case ModeLabel::bus:
    case ModeLabel::car: return RoadUse::arterial;
    case ModeLabel::bike: return RoadUse::minor;
    default: return RoadUse::any;
  }
}

/// Random walk along the street grid restricted to the road class `use`.
/// Buses dwell at every bus stop they pass.
Route grid_route(const SynthConfig& cfg, const ModeProfile& prof, double needed_m, RoadUse use, bool dwell_at_stops,
                 std::mt19937_64& rng) {
  const int n = static_cast<int>(std::floor(cfg.city_size_m / cfg.block_m)) + 1;
  const int a = cfg.arterial_every;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  auto is_arterial = [&](int k) { return k % a == 0; };

  static constexpr int kDx[4] = {1, 0, -1, 0};
  static constexpr int kDy[4] = {0, 1, 0, -1};
  auto in_city = [&](int x, int y) { return x >= 0 && y >= 0 && x < n && y < n; };
  // Moving horizontally follows row gy; moving vertically follows column gx.
  auto allowed = [&](int dir, int gx, int gy) {
    const bool arterial = kDy[dir] == 0 ? is_arterial(gy) : is_arterial(gx);
    if (use == RoadUse::arterial) return arterial;
    if (use == RoadUse::minor) return !arterial;
    return true;
  };

  int gx = 0;
  int gy = 0;
  do {
    gx = pick(2, n - 3);
    gy = pick(2, n - 3);
  } while ((use == RoadUse::arterial && !(is_arterial(gx) && is_arterial(gy))) ||
           (use == RoadUse::minor && (is_arterial(gx) || is_arterial(gy))));
  int dir = pick(0, 3);

  Route r;
  r.path.push_back({gx * cfg.block_m, gy * cfg.block_m});
  double travelled = 0.0;
  while (travelled < needed_m) {
    if (u(rng) < prof.turn_prob) {
      const int turned = (dir + (u(rng) < 0.5 ? 1 : 3)) % 4;
      if (allowed(turned, gx, gy) && in_city(gx + kDx[turned], gy + kDy[turned])) dir = turned;
    }
    if (!in_city(gx + kDx[dir], gy + kDy[dir]) || !allowed(dir, gx, gy)) {
      // Prefer a side street over reversing.
      const int options[3] = {(dir + 1) % 4, (dir + 3) % 4, (dir + 2) % 4};
      for (int d : options) {
        if (allowed(d, gx, gy) && in_city(gx + kDx[d], gy + kDy[d])) {
          dir = d;
          break;
        }
      }
    }
    const int nx = gx + kDx[dir];
    const int ny = gy + kDy[dir];
    if (dwell_at_stops) {
      const double along_line = (kDy[dir] == 0) ? std::min(gx, nx) * cfg.block_m : std::min(gy, ny) * cfg.block_m;
      if (std::abs(std::fmod(along_line, cfg.bus_stop_spacing_m)) < 1e-6) {
        r.dwell_s.push_back(travelled + cfg.block_m / 2.0);
      }
    }
    gx = nx;
    gy = ny;
    r.path.push_back({gx * cfg.block_m, gy * cfg.block_m});
    travelled += cfg.block_m;
  }
  return r;
}

/// Shuttles along one subway line, dwelling at each station passed.
Route subway_route(const SubwayLine& line, double needed_m, std::mt19937_64& rng) {
  const auto k = line.station_s.size();
  std::size_t station = std::uniform_int_distribution<std::size_t>(0, k - 2)(rng);
  bool forward = std::uniform_int_distribution<int>(0, 1)(rng) == 1 || station == 0;
  Route r;
  double s = line.station_s[station];
  r.path.push_back(along(line.vertices, s));
  double travelled = 0.0;
  while (travelled < needed_m) {
    if (forward && station + 1 >= k) forward = false;
    if (!forward && station == 0) forward = true;
    const std::size_t next = forward ? station + 1 : station - 1;
    const double target = line.station_s[next];
    // Include any line vertex between the two stations.
    double acc = 0.0;
    std::vector<std::pair<double, XY>> corners;
    for (std::size_t i = 1; i + 1 < line.vertices.size(); ++i) {
      acc += dist(line.vertices[i - 1], line.vertices[i]);
      if (acc > std::min(s, target) && acc < std::max(s, target)) corners.emplace_back(acc, line.vertices[i]);
    }
    if (!forward) std::reverse(corners.begin(), corners.end());
    for (const auto& c : corners) r.path.push_back(c.second);
    r.path.push_back(along(line.vertices, target));
    travelled += std::abs(target - s);
    r.dwell_s.push_back(travelled);
    s = target;
    station = next;
  }
  return r;
}

TrajectorySegment simulate(const SynthConfig& cfg, const CityFrame& frame, ModeLabel mode, const Route& route,
                           double speed, double duration, double start_ts, std::mt19937_64& rng,
                           std::string id) {
  const ModeProfile& prof = cfg.profile(mode);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };
  auto next_stop_gap = [&] { return prof.stop_every_s > 0.0 ? -prof.stop_every_s * std::log(1.0 - u(rng)) : 1e300; };

  // Receiver noise is an AR(1) process so consecutive fixes stay coherent and
  // stationary periods do not register as motion.
  constexpr double kRho = 0.98;
  const double innovation = cfg.gps_noise_m * std::sqrt(1.0 - kRho * kRho);
  XY noise{gauss(rng) * cfg.gps_noise_m, gauss(rng) * cfg.gps_noise_m};

  double path_len = 0.0;
  for (std::size_t i = 1; i < route.path.size(); ++i) path_len += dist(route.path[i - 1], route.path[i]);

  TrajectorySegment seg;
  seg.segment_id = std::move(id);
  seg.mode = mode;
  double s = 0.0;
  double dwell_left = 0.0;
  double until_stop = next_stop_gap();
  std::size_t next_dwell = 0;
  const double dt = cfg.sample_interval_s;
  for (double t = 0.0; t <= duration + 1e-9; t += dt) {
    const XY p = along(route.path, s);
    seg.points.push_back({frame.lon(p.x + noise.x), frame.lat(p.y + noise.y), start_ts + t});
    noise = {kRho * noise.x + innovation * gauss(rng), kRho * noise.y + innovation * gauss(rng)};

    if (dwell_left > 0.0) {
      dwell_left -= dt;
      continue;
    }
    until_stop -= dt;
    if (until_stop <= 0.0) {
      dwell_left = uniform(prof.stop_min_s, prof.stop_max_s);
      until_stop = next_stop_gap();
      continue;
    }
    const double v = std::max(prof.min_speed_mps, speed * (1.0 + 0.12 * gauss(rng)));
    double next_s = std::min(s + v * dt, path_len);
    if (next_dwell < route.dwell_s.size() && next_s >= route.dwell_s[next_dwell]) {
      next_s = route.dwell_s[next_dwell++];
      dwell_left = uniform(prof.station_dwell_min_s, prof.station_dwell_max_s);
    }
    s = next_s;
  }
  return seg;
}

}  // namespace

SynthCorpus synthesize(const SynthConfig& cfg) {
  if (cfg.per_mode < 1) throw ConfigError("synth per_mode must be >= 1");
  if (cfg.block_m <= 0.0 || cfg.city_size_m < 8.0 * cfg.block_m * cfg.arterial_every) {
    throw ConfigError("synth city must span at least eight arterial blocks");
  }
  if (cfg.sample_interval_s <= 0.0) throw ConfigError("synth sample_interval_s must be positive");

  const CityFrame frame(cfg);
  const auto lines = subway_lines(cfg);
  SynthCorpus corpus;
  corpus.osm = build_city(cfg, frame, lines);

  for (ModeLabel mode : kAllModes) {
    const ModeProfile& prof = cfg.profile(mode);
    for (int i = 0; i < cfg.per_mode; ++i) {
      std::mt19937_64 rng(cfg.seed * 1000003ULL + static_cast<std::uint64_t>(mode) * 100000ULL +
                          static_cast<std::uint64_t>(i));
      std::uniform_real_distribution<double> u(0.0, 1.0);
      std::normal_distribution<double> gauss(0.0, 1.0);
      const double speed = std::max(prof.min_speed_mps, prof.speed_mean_mps + prof.speed_sd_mps * gauss(rng));
      const double duration = prof.duration_min_s + (prof.duration_max_s - prof.duration_min_s) * u(rng);
      const double start_ts =
          std::round(cfg.start_ts + u(rng) * cfg.time_span_days * 86400.0);
      const double needed = speed * duration * 1.2 + cfg.block_m;

      Route route;
      if (mode == ModeLabel::subway) {
        const auto li = std::uniform_int_distribution<std::size_t>(0, lines.size() - 1)(rng);
        route = subway_route(lines[li], needed, rng);
      } else {
        route = grid_route(cfg, prof, needed, road_use(mode), mode == ModeLabel::bus, rng);
      }
      corpus.segments.push_back(simulate(cfg, frame, mode, route, speed, duration, start_ts, rng,
                                         fmt::format("synth_{}_{:04d}", to_string(mode), i)));
    }
  }
  return corpus;
}

}  // namespace trajscene
