#include <benchmark/benchmark.h>

#include <string>

#include "newsflow/random.hpp"
#include "newsflow/topic_graph.hpp"

using namespace newsflow;

static SparseDistribution random_topic(Rng& rng, std::size_t vocab) {
  const auto p = rng.symmetric_dirichlet(0.05, vocab);
  SparseDistribution out;
  for (std::size_t w = 0; w < vocab; ++w) {
    if (p[w] > 0.0) out.emplace_back("w" + std::to_string(100000 + w), p[w]);
  }
  double sum = 0.0;
  for (const auto& [word, q] : out) sum += q;
  for (auto& [word, q] : out) q /= sum;
  return out;
}

static void BM_JsdSparse(benchmark::State& state) {
  Rng rng(7);
  const auto vocab = static_cast<std::size_t>(state.range(0));
  const auto p = random_topic(rng, vocab);
  const auto q = random_topic(rng, vocab);
  for (auto _ : state) benchmark::DoNotOptimize(jsd(p, q));
}
BENCHMARK(BM_JsdSparse)->Arg(1000)->Arg(20000);

static void BM_BuildGraph(benchmark::State& state) {
  Rng rng(8);
  std::vector<StockTopics> stocks;
  for (int s = 0; s < 10; ++s) {
    StockTopics st;
    st.stock = "S" + std::to_string(s);
    st.company = st.stock;
    for (int k = 0; k < state.range(0); ++k) {
      st.topic_ids.push_back(k);
      st.fve.push_back(1.0 / static_cast<double>(state.range(0)));
      st.top_words.push_back({"a", "b", "c"});
      st.distributions.push_back(random_topic(rng, 2000));
    }
    stocks.push_back(std::move(st));
  }
  for (auto _ : state) benchmark::DoNotOptimize(build_graph(stocks, 0.5));
}
BENCHMARK(BM_BuildGraph)->Arg(5)->Arg(20)->Unit(benchmark::kMillisecond);
