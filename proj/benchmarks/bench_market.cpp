#include <benchmark/benchmark.h>

#include "newsflow/market.hpp"
#include "newsflow/random.hpp"

using namespace newsflow;

static MarketSeries random_market(std::size_t n) {
  Rng rng(3);
  MarketSeries m;
  const Date start = Date::from_ymd(2000, 1, 3);
  for (std::size_t t = 0; t < n; ++t) {
    m.dates.push_back(start.add_days(static_cast<std::int32_t>(t)));
    m.volume.push_back(1 + static_cast<std::int64_t>(rng.uniform_index(1000000)));
  }
  return m;
}

static void BM_MovingMedian(benchmark::State& state) {
  const auto market = random_market(static_cast<std::size_t>(state.range(0)));
  const auto w = static_cast<std::size_t>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(moving_median_normalize(market, w));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0));
}
BENCHMARK(BM_MovingMedian)->Args({2000, 504})->Args({20000, 504})->Args({20000, 5000});

static void BM_DetectPeaks(benchmark::State& state) {
  const auto volume = moving_median_normalize(random_market(20000), 504);
  for (auto _ : state) benchmark::DoNotOptimize(detect_peaks(volume, volume.dates.front()));
}
BENCHMARK(BM_DetectPeaks);
