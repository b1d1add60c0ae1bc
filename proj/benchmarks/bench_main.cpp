#include <random>

#include <benchmark/benchmark.h>

#include "advregions/attack.hpp"
#include "advregions/classifier.hpp"
#include "advregions/metrics.hpp"
#include "advregions/segregation.hpp"

using namespace advregions;

namespace {

Image random_image(int c, int side, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Image img(c, side, side);
  for (double& v : img.pixels()) v = u(rng);
  return img;
}

Model default_model(int side) {
  ModelConfig cfg;
  cfg.seed = 1;
  return Model(cfg, {1, side, side}, {"a", "b"});
}

}  // namespace

static void BM_Ssim(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Grid<double> a(side, side), b(side, side);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = u(rng);
    b[i] = u(rng);
  }
  for (auto _ : state) benchmark::DoNotOptimize(ssim(a, b));
}
BENCHMARK(BM_Ssim)->Arg(28)->Arg(64)->Arg(224);

static void BM_Forward(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const Model m = default_model(side);
  const Image x = random_image(1, side, 2);
  for (auto _ : state) benchmark::DoNotOptimize(m.logits(x));
}
BENCHMARK(BM_Forward)->Arg(28)->Arg(64);

static void BM_InputGradient(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const Model m = default_model(side);
  const Image x = random_image(1, side, 2);
  for (auto _ : state) benchmark::DoNotOptimize(m.loss_gradient_wrt_input(x, Label::source));
}
BENCHMARK(BM_InputGradient)->Arg(28)->Arg(64);

static void BM_Fgsm(benchmark::State& state) {
  const Model m = default_model(28);
  const Image x = random_image(1, 28, 4);
  for (auto _ : state) benchmark::DoNotOptimize(fgsm(m, x, Label::source, {0.1, false}));
}
BENCHMARK(BM_Fgsm);

static void BM_RoiMap(benchmark::State& state) {
  const Model m = default_model(28);
  const Image x = random_image(1, 28, 5);
  for (auto _ : state) benchmark::DoNotOptimize(roi_map(m, x));
}
BENCHMARK(BM_RoiMap);
BENCHMARK_MAIN();
