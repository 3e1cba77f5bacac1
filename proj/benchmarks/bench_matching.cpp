#include <benchmark/benchmark.h>

#include <random>

#include "team/aligners.hpp"
#include "team/model.hpp"

namespace {

constexpr std::size_t kDim = 64;
constexpr std::size_t kTokens = 8;

team::Matrix<float> random_video(std::size_t frames, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g(0.0f, 1.0f);
  team::Matrix<float> m(frames, kDim);
  for (auto& v : m.flat()) v = g(rng);
  return m;
}

void BM_TeamMatch(benchmark::State& state) {
  const auto t = static_cast<std::size_t>(state.range(0));
  team::ModelConfig cfg;
  cfg.dim = kDim;
  cfg.tokens = kTokens;
  const team::PatternPool<float> pool(cfg, 1);
  const auto a = random_video(t, 2), b = random_video(t, 3);
  for (auto _ : state) benchmark::DoNotOptimize(team::team_match_distance(pool, a, b));
  state.counters["units"] = static_cast<double>(kTokens);
}

void BM_FrameAlign(benchmark::State& state) {
  const auto t = static_cast<std::size_t>(state.range(0));
  const auto a = random_video(t, 2), b = random_video(t, 3);
  for (auto _ : state) benchmark::DoNotOptimize(team::frame_align_distance(a, b));
  state.counters["units"] = static_cast<double>(t * t);
}

void BM_TupleAlign(benchmark::State& state) {
  const auto t = static_cast<std::size_t>(state.range(0));
  const auto a = random_video(t, 2), b = random_video(t, 3);
  for (auto _ : state) benchmark::DoNotOptimize(team::tuple_align_distance(a, b, 2));
  const auto c = static_cast<double>(team::binomial(t, 2));
  state.counters["units"] = c * c;
}

}  // namespace

BENCHMARK(BM_TeamMatch)->RangeMultiplier(2)->Range(8, 256)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_FrameAlign)->RangeMultiplier(2)->Range(8, 256)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_TupleAlign)->RangeMultiplier(2)->Range(8, 128)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
