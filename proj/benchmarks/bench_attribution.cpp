#include <benchmark/benchmark.h>

#include "newsflow/attribution.hpp"
#include "newsflow/random.hpp"

using namespace newsflow;

namespace {

Design random_design(std::size_t rows, std::size_t cols) {
  Rng rng(5);
  Design d;
  const Date start = Date::from_ymd(2003, 1, 1);
  for (std::size_t k = 0; k < cols; ++k) d.topic_ids.push_back(static_cast<int>(k));
  for (std::size_t t = 0; t < rows; ++t) {
    d.dates.push_back(start.add_days(static_cast<std::int32_t>(t)));
    double y = 1.0 + 0.1 * rng.normal();
    for (std::size_t k = 0; k < cols; ++k) {
      const double x = static_cast<double>(rng.uniform_index(60));
      d.x.push_back(x);
      if (k % 5 == 0) y += 0.002 * x;
    }
    d.y.push_back(y);
  }
  return d;
}

}  // namespace

static void BM_NnLassoPath(benchmark::State& state) {
  const auto d = random_design(2000, static_cast<std::size_t>(state.range(0)));
  const auto grid = lambda_grid(lambda_max(d), 100, 1e-4);
  for (auto _ : state) {
    for (const double l : grid) benchmark::DoNotOptimize(fit_nnlasso(d, l));
  }
}
BENCHMARK(BM_NnLassoPath)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

static void BM_ChooseLambda(benchmark::State& state) {
  const auto d = random_design(2000, 30);
  CvOptions opts;
  opts.repeats = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(choose_lambda(d, opts));
}
BENCHMARK(BM_ChooseLambda)->Arg(1)->Arg(10)->Unit(benchmark::kMillisecond);
