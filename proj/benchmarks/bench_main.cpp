#include <random>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "trajscene/embedding.hpp"
#include "trajscene/kinematics.hpp"
#include "trajscene/mlp.hpp"
#include "trajscene/narrative.hpp"
#include "trajscene/scene.hpp"
#include "trajscene/synth.hpp"

using namespace trajscene;

namespace {

/// One synthetic segment per mode plus the city map, built once.
const SynthCorpus& corpus() {
  static const SynthCorpus c = [] {
    SynthConfig cfg;
    cfg.per_mode = 1;
    return synthesize(cfg);
  }();
  return c;
}

void BM_Analyze(benchmark::State& state) {
  const auto& seg = corpus().segments.at(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(analyze(seg));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(seg.points.size()));
  state.SetLabel(std::string(to_string(*seg.mode)));
}
BENCHMARK(BM_Analyze)->DenseRange(0, 4);

void BM_TextEmbedding(benchmark::State& state) {
  const SceneText text = render_narrative(analyze(corpus().segments.front()));
  const auto dim = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(embed_text_offline(text, dim, 1));
}
BENCHMARK(BM_TextEmbedding)->Arg(256)->Arg(1024);

void BM_RenderScene(benchmark::State& state) {
  const auto& seg = corpus().segments.at(2);
  const BBox box = scene_bbox(seg);
  const SceneLayers layers = extract_layers(corpus().osm, box);
  const bool raster = state.range(0) != 0;
  for (auto _ : state) benchmark::DoNotOptimize(render_scene(seg, layers, box, {}, raster));
  state.SetLabel(raster ? "svg+raster" : "svg");
}
BENCHMARK(BM_RenderScene)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_LayerExtraction(benchmark::State& state) {
  const BBox box = scene_bbox(corpus().segments.at(3));
  for (auto _ : state) benchmark::DoNotOptimize(extract_layers(corpus().osm, box));
}
BENCHMARK(BM_LayerExtraction)->Unit(benchmark::kMicrosecond);

void BM_TrainStep(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  const MlpModel model = MlpModel::initialize({dim, 128, 5}, 13);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  Eigen::MatrixXd x(dim, 64);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
  std::vector<int> labels(64);
  for (int i = 0; i < 64; ++i) labels[static_cast<std::size_t>(i)] = i % 5;
  Gradients grads;
  for (auto _ : state) benchmark::DoNotOptimize(loss_and_gradients(model, x, labels, 1e-4, &grads));
  state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_TrainStep)->Arg(256)->Arg(512)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
