#include <benchmark/benchmark.h>

#include "newsflow/lda.hpp"
#include "newsflow/synth.hpp"

using namespace newsflow;

static void BM_GibbsSweep(benchmark::State& state) {
  TruthOptions t;
  t.num_topics = 20;
  t.vocab_size = 2000;
  t.disjoint = false;
  t.seed = 1;
  const auto truth = make_ground_truth(t);
  CorpusOptions c;
  c.days = 100;
  const auto synth = generate_corpus(truth, c);
  LdaConfig cfg;
  cfg.num_topics = static_cast<std::size_t>(state.range(0));
  cfg.seed = 2;
  GibbsSampler sampler(synth.corpus, cfg);
  std::size_t tokens = 0;
  for (std::size_t d = 0; d < synth.corpus.size(); ++d) tokens += synth.corpus.document(d).tokens.size();
  for (auto _ : state) sampler.sweep();
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * tokens));
}
BENCHMARK(BM_GibbsSweep)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);
