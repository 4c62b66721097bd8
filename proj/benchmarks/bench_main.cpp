#include <random>

#include <benchmark/benchmark.h>

#include "pcmp/clusterer.hpp"
#include "pcmp/colorlab.hpp"
#include "pcmp/losses.hpp"
#include "pcmp/model.hpp"

namespace {

pcmp::Image noise_image(int w, int h, std::uint64_t seed) {
  pcmp::Image img;
  img.width = w;
  img.height = h;
  img.channels = 3;
  img.pixels.resize(static_cast<std::size_t>(w) * h * 3);
  std::mt19937_64 rng(seed);
  // a few flat blobs so the histogram is not all singletons
  std::uniform_int_distribution<int> pick(0, 5);
  const std::uint8_t tones[6][3] = {{200, 30, 30}, {30, 30, 200}, {240, 240, 240},
                                    {20, 20, 20}, {90, 160, 60}, {180, 120, 40}};
  for (std::size_t i = 0; i < img.pixels.size() / 3; ++i) {
    const auto& t = tones[pick(rng)];
    for (int c = 0; c < 3; ++c) img.pixels[3 * i + c] = static_cast<std::uint8_t>(t[c] + (rng() % 9));
  }
  return img;
}

pcmp::Matrix random_features(std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  pcmp::Matrix m(n, d);
  for (double& v : m.values()) v = g(rng);
  return m;
}

void BM_RgbToLab(benchmark::State& state) {
  int i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(pcmp::rgb_to_lab(i & 255, (i >> 8) & 255, (i >> 16) & 255));
    ++i;
  }
}
BENCHMARK(BM_RgbToLab);

void BM_ExtractPalette(benchmark::State& state) {
  const auto img = noise_image(static_cast<int>(state.range(0)), static_cast<int>(state.range(0)), 7);
  const auto mask = pcmp::build_mask(img);
  for (auto _ : state) benchmark::DoNotOptimize(pcmp::extract_palette(img, mask, 3, 0));
}
BENCHMARK(BM_ExtractPalette)->Arg(64)->Arg(256);

void BM_ForwardOutfit(benchmark::State& state) {
  pcmp::ModelConfig cfg;
  cfg.graph_kind = state.range(1) ? pcmp::GraphKind::Relation : pcmp::GraphKind::Node;
  const auto params = pcmp::make_model(cfg, 1);
  const auto x = random_features(static_cast<std::size_t>(state.range(0)), 9, 2);
  for (auto _ : state) benchmark::DoNotOptimize(pcmp::forward_outfit(params, x));
}
BENCHMARK(BM_ForwardOutfit)->Args({4, 1})->Args({8, 1})->Args({4, 0})->Args({8, 0});

void BM_ForwardBackward(benchmark::State& state) {
  pcmp::ModelConfig cfg;
  const auto params = pcmp::make_model(cfg, 1);
  auto grads = pcmp::zeros_like(params);
  const auto x = random_features(static_cast<std::size_t>(state.range(0)), 9, 3);
  for (auto _ : state) {
    const auto f = pcmp::forward_outfit(params, x);
    pcmp::backward_outfit(params, f, pcmp::cross_entropy_grad(f.probs, 1), grads);
  }
}
BENCHMARK(BM_ForwardBackward)->Arg(4)->Arg(8);

void BM_KMeansCosine(benchmark::State& state) {
  const auto emb = random_features(static_cast<std::size_t>(state.range(0)), 20, 4);
  for (auto _ : state) benchmark::DoNotOptimize(pcmp::kmeans_cosine(emb, 5, 0));
}
BENCHMARK(BM_KMeansCosine)->Arg(1000)->Arg(4000);

}  // namespace

BENCHMARK_MAIN();
