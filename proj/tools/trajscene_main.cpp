#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "trajscene/config.hpp"
#include "trajscene/error.hpp"
#include "trajscene/interchange.hpp"
#include "trajscene/pipeline.hpp"

namespace fs = std::filesystem;
using namespace trajscene;

namespace {

struct GlobalOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

PipelineConfig load(const GlobalOptions& g) {
  PipelineConfig cfg = g.config.empty() ? PipelineConfig{} : load_config(g.config);
  if (g.seed) cfg.apply_seed(*g.seed);
  if (!g.out.empty()) cfg.paths.out_dir = g.out;
  return cfg;
}

/// Pre-flight for single-stage commands: numeric validation plus the remote
/// tokens the stage will need.
void preflight(const PipelineConfig& cfg, bool narrative_remote, bool embedding_remote) {
  cfg.validate(false);
  if (narrative_remote && cfg.narrative.source == "remote") remote::bearer_token(cfg.narrative.endpoint);
  if (embedding_remote && cfg.embedding.embedder == "remote") remote::bearer_token(cfg.embedding.endpoint);
}

fs::path or_default(const std::string& given, const fs::path& fallback) {
  return given.empty() ? fallback : fs::path(given);
}

void print_status(const Pipeline& p) {
  for (const auto& [stage, status] : p.stage_status()) std::cerr << fmt::format("[{}] {}\n", stage, status);
  for (const auto& w : p.manifest().warnings) std::cerr << "warning: " << w << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trajectory scene pipeline: GPS segments to scene images, narratives, embeddings and a mode classifier"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions g;
  std::uint64_t seed = 0;
  app.add_option("--config", g.config, "JSON config file")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "Override embedding, split and init seeds");
  app.add_option("--out", g.out, "Output directory (overrides paths.out_dir)");

  std::string geolife_root;
  std::string segments;
  std::string features_path;
  std::string narratives;
  std::string embeddings;
  std::string combined;
  std::string model;
  std::string combined_dir;
  int per_mode = 100;

  auto* ingest = app.add_subcommand("ingest", "Parse, clean and segment a GeoLife tree into segments.jsonl");
  ingest->add_option("geolife_root", geolife_root, "GeoLife root (contains Data/<user>/)");
  auto* features = app.add_subcommand("features", "Derive temporal and dynamic features per segment");
  features->add_option("--segments", segments, "Segment file");
  auto* render = app.add_subcommand("render", "Render one map scene per segment");
  render->add_option("--segments", segments, "Segment file");
  auto* narrate = app.add_subcommand("narrate", "Write the three-part narrative per segment");
  narrate->add_option("--features", features_path, "Feature file");
  narrate->add_option("--segments", segments, "Segment file");
  auto* embed = app.add_subcommand("embed", "Embed scene images and narratives");
  embed->add_option("--segments", segments, "Segment file");
  embed->add_option("--narratives", narratives, "Narrative file");
  auto* combine = app.add_subcommand("combine", "Write combined embeddings for every combine rule");
  combine->add_option("--embeddings", embeddings, "Modality embedding file");
  auto* train = app.add_subcommand("train", "Train the mode classifier");
  train->add_option("--combined", combined, "Combined embedding file");
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on the test split");
  eval->add_option("--model", model, "Checkpoint file");
  eval->add_option("--combined", combined, "Combined embedding file");
  auto* ablate = app.add_subcommand("ablate", "Train and compare all four combine rules");
  ablate->add_option("--combined-dir", combined_dir, "Directory with <rule>.jsonl files");
  auto* pipeline = app.add_subcommand("pipeline", "Run every stage, skipping those already up to date");
  auto* synth = app.add_subcommand("synth", "Generate a synthetic labeled corpus and OSM extract");
  synth->add_option("--per-mode", per_mode, "Segments per mode")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);
  if (*seed_opt) g.seed = seed;

  std::string stage = "config";
  try {
    if (synth->parsed()) {
      stage = "synth";
      SynthConfig sc;
      sc.per_mode = per_mode;
      if (g.seed) sc.seed = *g.seed;
      const fs::path out = g.out.empty() ? fs::path("synth") : fs::path(g.out);
      cmd_synth(sc, out);
      std::cout << fmt::format("wrote {} and {}\n", (out / layout::kSegments).string(),
                               (out / layout::kSynthOsm).string());
      return 0;
    }

    PipelineConfig cfg = load(g);
    const fs::path out = cfg.paths.out_dir;
    if (!segments.empty()) cfg.paths.segments = segments;

    if (pipeline->parsed()) {
      cfg.validate(true);
      Pipeline p(cfg, out);
      const EvalReport report = p.run_all();
      print_status(p);
      std::cout << format_table({{std::string(to_string(cfg.rule)), report}});
      if (cfg.ablation && std::filesystem::exists(out / layout::kAblationText)) {
        std::cout << read_file(out / layout::kAblationText);
      }
      return 0;
    }

    preflight(cfg, narrate->parsed(), embed->parsed());
    Pipeline p(cfg, out);
    const fs::path seg_file = or_default(cfg.paths.segments, out / layout::kSegments);
    if (ingest->parsed()) {
      const std::string root = geolife_root.empty() ? cfg.paths.geolife_root : geolife_root;
      if (root.empty()) throw ConfigError("ingest needs a GeoLife root");
      std::cout << p.ingest(root).string() << "\n";
    } else if (features->parsed()) {
      std::cout << p.features(seg_file).string() << "\n";
    } else if (render->parsed()) {
      std::cout << p.render(seg_file).string() << "\n";
    } else if (narrate->parsed()) {
      std::cout << p.narrate(or_default(features_path, out / layout::kFeatures), seg_file).string() << "\n";
    } else if (embed->parsed()) {
      std::cout << p.embed(seg_file, or_default(narratives, out / layout::kNarratives)).string() << "\n";
    } else if (combine->parsed()) {
      for (const auto& f : p.combine(or_default(embeddings, out / layout::kEmbeddings))) {
        std::cout << f.string() << "\n";
      }
    } else if (train->parsed()) {
      const fs::path in = or_default(combined, out / layout::kCombinedDir / (std::string(to_string(cfg.rule)) + ".jsonl"));
      std::cout << p.train(in).string() << "\n";
    } else if (eval->parsed()) {
      const fs::path in = or_default(combined, out / layout::kCombinedDir / (std::string(to_string(cfg.rule)) + ".jsonl"));
      const EvalReport report = p.eval(or_default(model, out / layout::kModel), in);
      std::cout << format_table({{std::string(to_string(cfg.rule)), report}});
    } else if (ablate->parsed()) {
      p.ablate(or_default(combined_dir, out / layout::kCombinedDir));
      std::cout << read_file(out / layout::kAblationText);
    }
    print_status(p);
    return 0;
  } catch (const StageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << fmt::format("error: [{}] {}\n", stage, e.what());
    return 1;
  }
}
