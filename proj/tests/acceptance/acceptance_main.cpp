#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>
#include <iostream>
#include <numeric>
#include <random>
#include <regex>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "oracles.hpp"
#include "support.hpp"
#include "trajscene/ablation.hpp"
#include "trajscene/embedding.hpp"
#include "trajscene/error.hpp"
#include "trajscene/geo.hpp"
#include "trajscene/geolife.hpp"
#include "trajscene/interchange.hpp"
#include "trajscene/kinematics.hpp"
#include "trajscene/metrics.hpp"
#include "trajscene/mlp.hpp"
#include "trajscene/osm.hpp"
#include "trajscene/pipeline.hpp"
#include "trajscene/preprocess.hpp"
#include "trajscene/records.hpp"
#include "trajscene/scene.hpp"

using namespace trajscene;
using namespace trajscene::testing;
namespace fs = std::filesystem;

namespace tol {
constexpr double kDetourLo = 2.86;
constexpr double kDetourHi = 2.96;
constexpr double kSpeedLoKmh = 10.7;
constexpr double kSpeedHiKmh = 11.7;
constexpr double kOneDegreeM = 111194.9;
constexpr double kOneDegreeAbsM = 0.5;
constexpr double kOracleRel = 1e-3;
constexpr double kGradRel = 1e-4;
constexpr double kMinConcatAccuracy = 0.90;
constexpr double kNormAbs = 1e-6;
constexpr double kFastSeconds = 1.0;
constexpr double kGradSeconds = 10.0;
constexpr double kEndToEndSeconds = 300.0;
}  // namespace tol

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

double vec_norm(const std::vector<double>& v) { return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0)); }

Verdict detour_arithmetic() {
  const auto r = analyze(detour_fixture());
  const double detour = r.dynamics.detour_index.value_or(0.0);
  const double kmh = r.dynamics.avg_speed_mps * 3.6;
  const bool ok = detour >= tol::kDetourLo && detour <= tol::kDetourHi && kmh >= tol::kSpeedLoKmh &&
                  kmh <= tol::kSpeedHiKmh && std::fabs(r.temporal.duration_s - 645.0) < 1e-9;
  return {ok, fmt::format("path {:.1f} m, chord {:.1f} m, detour {:.4f}, avg {:.3f} km/h, {:.0f} s",
                          r.dynamics.path_length_m, r.dynamics.straight_line_m, detour, kmh, r.temporal.duration_s)};
}

Verdict distance_oracle() {
  const double one = geo::haversine_m(0.0, 0.0, 0.0, 1.0);
  bool ok = std::fabs(one - tol::kOneDegreeM) <= tol::kOneDegreeAbsM;
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> lat(-80.0, 80.0), lon(-180.0, 180.0);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const double a = lat(rng), b = lon(rng), c = lat(rng), d = lon(rng);
    const double ref = oracle::sphere_distance_m(a, b, c, d);
    worst = std::max(worst, std::fabs(geo::haversine_m(a, b, c, d) - ref) / ref);
  }
  ok = ok && worst < tol::kOracleRel;
  return {ok, fmt::format("1 deg = {:.3f} m, worst relative error over 20 pairs {:.2e}", one, worst)};
}

Verdict parser_fixtures() {
  const fs::path root = data_dir() / "geolife_mini" / "Data";
  const auto a = geolife::parse_plt(read_file(root / "000" / "Trajectory" / "20081023025304.plt"));
  const auto b = geolife::parse_plt(read_file(root / "000" / "Trajectory" / "20081024010000.plt"));
  const auto c = geolife::parse_plt(read_file(root / "001" / "Trajectory" / "20090101000000.plt"));
  const auto labels = geolife::parse_labels(read_file(root / "000" / "labels.txt"));
  std::vector<GpsPoint> pts = a;
  pts.insert(pts.end(), b.begin(), b.end());
  const auto segs = segment_by_labels(clean(pts, {}), labels, {}, "000");
  bool ok = a.size() == 13 && b.size() == 43 && c.size() == 5 && labels.size() == 4 && segs.size() == 3;
  if (ok) {
    ok = segs[0].points.size() == 12 && segs[1].points.size() == 17 && segs[2].points.size() == 13 &&
         segs[0].mode == ModeLabel::walk && segs[1].mode == ModeLabel::bus;
  }
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> lat(-89.9, 89.9), lon(-179.9, 179.9);
  std::vector<GpsPoint> random;
  double ts = 1.2e9;
  for (int i = 0; i < 500; ++i) {
    ts += 1 + static_cast<int>(rng() % 30);
    random.push_back(pt(lat(rng), lon(rng), ts));
  }
  const bool lossless = geolife::parse_plt(geolife::format_plt(random)) == random &&
                        geolife::parse_plt(geolife::format_plt(b)) == b;
  return {ok && lossless, fmt::format("fixes {}/{}/{}, labels {}, segments {}, round trip {}", a.size(), b.size(),
                                      c.size(), labels.size(), segs.size(), lossless ? "lossless" : "lossy")};
}

Verdict gradient_check_models() {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> g(0.0, 1.0);
  double worst = 0.0;
  for (int m = 0; m < 10; ++m) {
    std::vector<int> dims{3 + m % 4};
    for (int h = 0; h < 1 + m % 2; ++h) dims.push_back(4 + (m + h) % 5);
    dims.push_back(5);
    const MlpModel model = MlpModel::initialize(dims, 500 + m);
    Eigen::MatrixXd x(dims.front(), 6);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
    std::vector<int> labels;
    for (int i = 0; i < 6; ++i) labels.push_back(static_cast<int>(rng() % 5));
    worst = std::max(worst, gradient_check(model, x, labels, m % 2 ? 1e-3 : 0.0));
  }
  return {worst < tol::kGradRel, fmt::format("worst relative error {:.2e} over 10 models", worst)};
}

PipelineConfig synth_config(const fs::path& corpus) {
  PipelineConfig cfg;
  cfg.paths.segments = (corpus / layout::kSegments).string();
  cfg.paths.osm = (corpus / layout::kSynthOsm).string();
  return cfg;
}

Verdict determinism(const fs::path& corpus, const fs::path& work) {
  PipelineConfig cfg = synth_config(corpus);
  cfg.ablation = false;
  Pipeline(cfg, work / "a").run_all();
  Pipeline(cfg, work / "b").run_all();
  const std::vector<fs::path> files{layout::kEmbeddings, fs::path(layout::kCombinedDir) / "concatenation.jsonl",
                                    layout::kModel, layout::kEvalJson, layout::kEvalText};
  std::vector<std::string> differing;
  for (const auto& f : files) {
    if (read_file(work / "a" / f) != read_file(work / "b" / f)) differing.push_back(f.string());
  }
  return {differing.empty(), differing.empty() ? "embeddings, combined vectors, checkpoint and eval files identical"
                                               : "differ: " + fmt::format("{}", fmt::join(differing, ", "))};
}

const AblationRow* row_for(const std::vector<AblationRow>& rows, CombineRule rule) {
  for (const auto& r : rows) {
    if (r.rule == rule) return &r;
  }
  return nullptr;
}

Verdict end_to_end(const std::vector<AblationRow>& rows) {
  const auto* concat = row_for(rows, CombineRule::concatenation);
  const auto* image = row_for(rows, CombineRule::image_only);
  const auto* text = row_for(rows, CombineRule::text_only);
  if (!concat || !image || !text) return {false, "ablation rows missing"};
  const double c = concat->report.accuracy, i = image->report.accuracy, t = text->report.accuracy;
  return {c >= tol::kMinConcatAccuracy && c > i && c > t,
          fmt::format("concatenation {:.4f}, image_only {:.4f}, text_only {:.4f}, fusion {:.4f}", c, i, t,
                      row_for(rows, CombineRule::fusion)->report.accuracy)};
}

Verdict ablation_integrity(const std::vector<AblationRow>& rows, const fs::path& combined_dir) {
  bool ok = rows.size() == 4;
  for (const auto& r : rows) {
    ok = ok && r.test_ids == rows.front().test_ids && !r.test_ids.empty();
    long trace = 0, total = 0;
    for (std::size_t a = 0; a < kModeCount; ++a) {
      for (std::size_t b = 0; b < kModeCount; ++b) total += r.report.confusion[a][b];
      trace += r.report.confusion[a][a];
    }
    ok = ok && total == static_cast<long>(r.test_ids.size()) &&
         r.report.accuracy == static_cast<double>(trace) / static_cast<double>(total);
  }
  EmbeddingStore store;
  for (CombineRule rule : kAllRules) {
    for (const auto& line : read_jsonl(combined_dir / (std::string(to_string(rule)) + ".jsonl"))) {
      store[rule].push_back(scene_embedding_from_json(line));
    }
  }
  const std::string dropped = store[CombineRule::text_only].back().segment_id;
  store[CombineRule::text_only].pop_back();
  bool named = false;
  try {
    run_ablation(store, {});
  } catch (const IntegrityError& e) {
    named = std::string(e.what()).find(dropped) != std::string::npos;
  }
  return {ok && named, fmt::format("{} rows, {} shared test ids, misaligned store {}", rows.size(),
                                   rows.empty() ? 0 : rows.front().test_ids.size(),
                                   named ? "rejected by segment id" : "not rejected")};
}

Verdict rendering(const fs::path& corpus) {
  const auto segments = read_segments(corpus / layout::kSegments);
  const osm::Extract extract = osm::parse_osm_xml(read_file(corpus / layout::kSynthOsm));
  const std::regex number_attr(R"#(\b(x|y|cx|cy|x1|y1|x2|y2)="(-?[0-9.]+)")#");
  const std::regex points_attr(R"#(points="([^"]*)")#");
  std::size_t checked = 0;
  for (std::size_t k = 0; k < segments.size(); k += 25) {
    const auto& seg = segments[k];
    const BBox box = scene_bbox(seg);
    const SceneLayers layers = extract_layers(extract, box);
    const SceneImage a = render_scene(seg, layers, box);
    const SceneImage b = render_scene(seg, layers, box);
    if (a.vector_doc != b.vector_doc) return {false, seg.segment_id + ": documents differ"};
    const std::string& doc = a.vector_doc;
    const auto traj = doc.find("<g id=\"trajectory\"");
    if (traj == std::string::npos) return {false, seg.segment_id + ": no trajectory group"};
    for (const char* layer : {"<g id=\"roads\"", "<g id=\"subway_lines\"", "<g id=\"bus_stations\""}) {
      const auto at = doc.find(layer);
      if (at == std::string::npos || at > traj) return {false, seg.segment_id + ": layer after trajectory"};
    }
    if (doc.rfind("<g") != traj) return {false, seg.segment_id + ": content drawn after the trajectory"};
    const auto traj_end = doc.find("</g>", traj);
    const std::string traj_block = doc.substr(traj, traj_end - traj);
    if (traj_block.find("stroke=\"#ff0000\"") == std::string::npos) return {false, seg.segment_id + ": not red"};
    const double w = a.width_px, h = a.height_px;
    for (auto it = std::sregex_iterator(doc.begin(), doc.end(), number_attr); it != std::sregex_iterator(); ++it) {
      const double v = std::stod((*it)[2].str());
      const bool is_x = (*it)[1].str().front() == 'x' || (*it)[1].str() == "cx";
      if (v < 0.0 || v > (is_x ? w : h)) return {false, seg.segment_id + ": attribute outside canvas"};
    }
    for (auto it = std::sregex_iterator(doc.begin(), doc.end(), points_attr); it != std::sregex_iterator(); ++it) {
      std::string list = (*it)[1].str();
      std::replace(list.begin(), list.end(), ',', ' ');
      std::istringstream in(list);
      double x = 0, y = 0;
      while (in >> x >> y) {
        if (x < 0.0 || x > w || y < 0.0 || y > h) return {false, seg.segment_id + ": vertex outside canvas"};
      }
    }
    ++checked;
  }
  return {checked > 0, fmt::format("{} scenes deterministic, red trajectory last, all coordinates on canvas", checked)};
}

Verdict embedding_structure(const fs::path& run_dir) {
  std::map<std::string, std::vector<double>> image, text;
  for (const auto& line : read_jsonl(run_dir / layout::kEmbeddings)) {
    const ModalityEmbedding e = modality_embedding_from_json(line);
    (e.modality == Modality::image ? image : text)[e.segment_id] = e.vector;
  }
  double worst_unit = 0.0, worst_concat = 0.0, worst_fusion = 0.0;
  bool split_ok = !image.empty();
  for (const auto& line : read_jsonl(run_dir / layout::kCombinedDir / "concatenation.jsonl")) {
    const SceneEmbedding c = scene_embedding_from_json(line);
    const auto& iv = image.at(c.segment_id);
    const auto& tv = text.at(c.segment_id);
    split_ok = split_ok && c.combined.size() == iv.size() + tv.size() &&
               std::equal(iv.begin(), iv.end(), c.combined.begin()) &&
               std::equal(tv.begin(), tv.end(), c.combined.begin() + static_cast<long>(iv.size()));
    worst_unit = std::max({worst_unit, std::fabs(vec_norm(iv) - 1.0), std::fabs(vec_norm(tv) - 1.0)});
    worst_concat = std::max(worst_concat, std::fabs(vec_norm(c.combined) - std::sqrt(2.0)));
  }
  for (const auto& line : read_jsonl(run_dir / layout::kCombinedDir / "fusion.jsonl")) {
    worst_fusion = std::max(worst_fusion, std::fabs(vec_norm(scene_embedding_from_json(line).combined) - 1.0));
  }
  const bool ok = split_ok && worst_unit <= tol::kNormAbs && worst_concat <= tol::kNormAbs &&
                  worst_fusion <= tol::kNormAbs;
  return {ok, fmt::format("{} scenes, split {}, |norm-1| {:.1e}, |concat-sqrt2| {:.1e}, |fusion-1| {:.1e}",
                          image.size(), split_ok ? "exact" : "broken", worst_unit, worst_concat, worst_fusion)};
}

Verdict metrics_oracle() {
  Confusion c{};
  c[0] = {2, 0, 0, 0, 0};
  c[1] = {1, 1, 0, 0, 0};
  c[2] = {0, 0, 2, 0, 0};
  const EvalReport r = evaluate_confusion(c);
  const auto& p = r.per_class;
  const bool ok = r.accuracy == 5.0 / 6.0 && p[0].precision == 2.0 / 3.0 && p[1].precision == 1.0 &&
                  p[2].precision == 1.0 && p[0].recall == 1.0 && p[1].recall == 0.5 && p[2].recall == 1.0 &&
                  r.absent_classes == std::vector<ModeLabel>{ModeLabel::car, ModeLabel::subway};
  return {ok, fmt::format("accuracy {:.6f}, precision {:.4f}/{:.4f}/{:.4f}, recall {:.4f}/{:.4f}/{:.4f}", r.accuracy,
                          p[0].precision, p[1].precision, p[2].precision, p[0].recall, p[1].recall, p[2].recall)};
}

template <typename Fn>
Verdict timed(Fn&& fn, double limit_s, double& elapsed) {
  const auto t0 = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = fn();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (limit_s > 0 && elapsed >= limit_s) {
    v.pass = false;
    v.detail += fmt::format(" (over the {:.0f} s budget)", limit_s);
  }
  return v;
}

}  // namespace

int main() {
  TempDir work("acceptance");
  const fs::path corpus = work / "corpus";
  const fs::path e2e = work / "e2e";
  int failures = 0;
  auto report = [&](int id, const char* name, const Verdict& v, double elapsed) {
    failures += v.pass ? 0 : 1;
    std::cout << fmt::format("{} criterion {:>2} {}: {} [{:.2f} s]\n", v.pass ? "PASS" : "FAIL", id, name, v.detail,
                             elapsed)
              << std::flush;
  };

  auto check = [&](int id, const char* name, auto&& fn, double limit_s) {
    double elapsed = 0;
    const Verdict v = timed(fn, limit_s, elapsed);
    report(id, name, v, elapsed);
  };
  check(1, "detour arithmetic", detour_arithmetic, tol::kFastSeconds);
  check(2, "distance oracle", distance_oracle, tol::kFastSeconds);
  check(3, "parser fixtures", parser_fixtures, tol::kFastSeconds);
  check(4, "gradient check", gradient_check_models, tol::kGradSeconds);

  // The end-to-end run produces the corpus and embeddings that criteria 5, 7, 8 and 9 inspect.
  std::vector<AblationRow> rows;
  double e2e_seconds = 0;
  const Verdict v6 = timed(
      [&] {
        SynthConfig synth;
        synth.per_mode = 100;
        synth.seed = 42;
        cmd_synth(synth, corpus);
        PipelineConfig cfg = synth_config(corpus);
        cfg.ablation = false;
        Pipeline p(cfg, e2e);
        p.run_all();
        EmbeddingStore store;
        for (CombineRule rule : kAllRules) {
          for (const auto& line : read_jsonl(e2e / layout::kCombinedDir / (std::string(to_string(rule)) + ".jsonl"))) {
            store[rule].push_back(scene_embedding_from_json(line));
          }
        }
        rows = run_ablation(store, p.config().train);
        return end_to_end(rows);
      },
      tol::kEndToEndSeconds, e2e_seconds);

  check(5, "determinism", [&] { return determinism(corpus, work / "det"); }, 0);
  report(6, "end-to-end synthetic", v6, e2e_seconds);
  check(7, "ablation integrity", [&] { return ablation_integrity(rows, e2e / layout::kCombinedDir); }, 0);
  check(8, "rendering invariants", [&] { return rendering(corpus); }, 0);
  check(9, "embedding structure", [&] { return embedding_structure(e2e); }, 0);
  check(10, "metrics oracle", metrics_oracle, 0);

  std::cout << fmt::format("{} of 10 criteria passed\n", 10 - failures);
  return failures == 0 ? 0 : 1;
}
