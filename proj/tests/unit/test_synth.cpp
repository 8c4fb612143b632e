#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "newsflow/corpus.hpp"
#include "newsflow/error.hpp"
#include "newsflow/random.hpp"
#include "newsflow/synth.hpp"
#include "oracles.hpp"

using namespace newsflow;

namespace {

TruthOptions small_truth(std::uint64_t seed) {
  TruthOptions o;
  o.num_topics = 4;
  o.vocab_size = 80;
  o.causal_topics = 2;
  o.seed = seed;
  return o;
}

CorpusOptions small_corpus() {
  CorpusOptions o;
  o.days = 30;
  o.docs_per_day_min = 2;
  o.docs_per_day_max = 6;
  o.doc_length_min = 5;
  o.doc_length_max = 15;
  return o;
}

}  // namespace

TEST(GroundTruth, ShapesAndSupport) {
  const auto truth = make_ground_truth(small_truth(1));
  EXPECT_NO_THROW(truth.validate());
  EXPECT_EQ(truth.support.size(), 2u);
  for (std::size_t k = 0; k < 4; ++k) {
    const bool causal = std::find(truth.support.begin(), truth.support.end(), static_cast<int>(k)) !=
                        truth.support.end();
    if (causal) {
      EXPECT_GE(truth.weights[k], 2.0);
      EXPECT_LE(truth.weights[k], 5.0);
    } else {
      EXPECT_EQ(truth.weights[k], 0.0);
    }
    const auto dist = truth.distribution(k);
    double sum = 0.0;
    for (const auto& [w, p] : dist) sum += p;
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
  EXPECT_EQ(GroundTruth::word(7), "w00007");
}

TEST(GroundTruth, DirichletTopicsAreNormalized) {
  auto o = small_truth(2);
  o.disjoint = false;
  const auto truth = make_ground_truth(o);
  EXPECT_NO_THROW(truth.validate());
}

TEST(GroundTruth, ValidateRejectsBadShapes) {
  auto truth = make_ground_truth(small_truth(1));
  truth.weights.pop_back();
  EXPECT_THROW(truth.validate(), ConfigError);
  truth = make_ground_truth(small_truth(1));
  truth.phi[0] += 0.5;
  EXPECT_THROW(truth.validate(), ConfigError);
  truth = make_ground_truth(small_truth(1));
  truth.weights[0] = -1.0;
  EXPECT_THROW(truth.validate(), ConfigError);
}

TEST(GenerateCorpus, SingleTopic) {
  auto o = small_truth(3);
  o.num_topics = 1;
  o.causal_topics = 1;
  const auto truth = make_ground_truth(o);
  const auto synth = generate_corpus(truth, small_corpus());
  for (const auto& doc : synth.true_assignments) {
    for (const auto z : doc) EXPECT_EQ(z, 0u);
  }
}

TEST(GenerateCorpus, DisjointTopicsAreIdentifiable) {
  const auto truth = make_ground_truth(small_truth(4));
  const auto synth = generate_corpus(truth, small_corpus());
  const std::size_t block = truth.vocab_size / truth.num_topics;
  for (std::size_t d = 0; d < synth.corpus.size(); ++d) {
    const auto& tokens = synth.corpus.document(d).tokens;
    ASSERT_EQ(tokens.size(), synth.true_assignments[d].size());
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      EXPECT_EQ(tokens[i] / block, synth.true_assignments[d][i]);
    }
  }
}

TEST(GenerateCorpus, DeterministicAndConsistentWithRecords) {
  const auto truth = make_ground_truth(small_truth(5));
  const auto a = generate_corpus(truth, small_corpus());
  const auto b = generate_corpus(truth, small_corpus());
  EXPECT_EQ(a.true_assignments, b.true_assignments);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(a.records[i].id, b.records[i].id);
    EXPECT_EQ(a.records[i].body, b.records[i].body);
  }
  EXPECT_EQ(a.period.day_count(), 30);
  // Tokenizing the records gives the same words in the same order.
  const auto retokenized = tokenize(a.records, {}, "acme");
  ASSERT_EQ(retokenized.size(), a.corpus.size());
  for (std::size_t d = 0; d < a.corpus.size(); ++d) {
    const auto& src = a.corpus.document(d).tokens;
    const auto& dst = retokenized.document(d).tokens;
    ASSERT_EQ(dst.size(), src.size() + 1);
    EXPECT_EQ(retokenized.vocabulary().token(dst[0]), "acme");
    for (std::size_t i = 0; i < src.size(); ++i) {
      EXPECT_EQ(retokenized.vocabulary().token(dst[i + 1]), a.corpus.vocabulary().token(src[i]));
    }
  }
}

TEST(GenerateCorpus, DocsPerDayWithinRange) {
  const auto truth = make_ground_truth(small_truth(6));
  const auto synth = generate_corpus(truth, small_corpus());
  for (const auto& [day, docs] : synth.corpus.day_index()) {
    EXPECT_GE(docs.size(), 2u);
    EXPECT_LE(docs.size(), 6u);
  }
}

TEST(GenerateVolume, NoiselessForwardModel) {
  auto o = small_truth(7);
  o.causal_topics = 1;
  o.weight_min = o.weight_max = 1.0;
  o.intercept = 0.0;
  o.noise_sigma = 0.0;
  const auto truth = make_ground_truth(o);
  const auto synth = generate_corpus(truth, small_corpus());
  const auto series = true_series(truth, synth);
  const auto market = generate_volume(truth, series);
  const auto k = static_cast<std::size_t>(truth.support[0]);
  ASSERT_EQ(market.volume.size(), series.num_days());
  for (std::size_t t = 0; t < series.num_days(); ++t) EXPECT_EQ(market.volume[t], series.at(k, t));
}

TEST(GenerateVolume, NullModelIsNoiseAroundIntercept) {
  auto o = small_truth(8);
  o.causal_topics = 0;
  o.noise_sigma = 5.0;
  const auto truth = make_ground_truth(o);
  auto copts = small_corpus();
  copts.days = 2000;
  const auto synth = generate_corpus(truth, copts);
  const auto market = generate_volume(truth, true_series(truth, synth));
  double mean = 0.0;
  for (const auto v : market.volume) mean += static_cast<double>(v) / 2000.0;
  EXPECT_NEAR(mean, 1000.0, 0.5);
}

TEST(GenerateVolume, OlsRecoversTruth) {
  for (const std::uint64_t seed : {11u, 12u, 13u}) {
    auto o = small_truth(seed);
    o.noise_sigma = 10.0;
    const auto truth = make_ground_truth(o);
    auto copts = small_corpus();
    copts.days = 300;
    const auto synth = generate_corpus(truth, copts);
    const auto series = true_series(truth, synth);
    const auto market = generate_volume(truth, series);
    const std::size_t k = truth.num_topics, n = series.num_days();
    std::vector<double> x(n * k), y(n);
    for (std::size_t t = 0; t < n; ++t) {
      y[t] = static_cast<double>(market.volume[t]);
      for (std::size_t j = 0; j < k; ++j) x[t * k + j] = static_cast<double>(series.at(j, t));
    }
    const auto beta = oracle::ols(x, y, k);
    const auto se = oracle::ols_standard_errors(x, n, k, o.noise_sigma);
    EXPECT_NEAR(beta[0], truth.intercept, 3.0 * se[0]) << "seed " << seed;
    for (std::size_t j = 0; j < k; ++j) {
      EXPECT_NEAR(beta[j + 1], truth.weights[j], 3.0 * se[j + 1]) << "seed " << seed << " topic " << j;
    }
  }
}

TEST(Hungarian, SolvesSmallAssignments) {
  // Optimal: row0->col1, row1->col0, row2->col2, total 1+2+2.
  const std::vector<double> cost{4, 1, 3, 2, 0, 5, 3, 2, 2};
  EXPECT_EQ(hungarian(cost, 3, 3), (std::vector<int>{1, 0, 2}));
  // More rows than columns leaves one unmatched.
  const auto r = hungarian({1, 9, 9, 1, 5, 5}, 3, 2);
  EXPECT_EQ(r[0], 0);
  EXPECT_EQ(r[1], 1);
  EXPECT_EQ(r[2], -1);
}

TEST(Hungarian, MatchesBruteForce) {
  Rng rng(1);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(6);
    std::vector<double> cost(n * n);
    for (auto& c : cost) c = rng.uniform();
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = 1e300;
    do {
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) total += cost[i * n + static_cast<std::size_t>(perm[i])];
      best = std::min(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
    const auto got = hungarian(cost, n, n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += cost[i * n + static_cast<std::size_t>(got[i])];
    EXPECT_NEAR(total, best, 1e-12);
  }
}

TEST(MatchTopics, RecoversPermutation) {
  const auto truth = make_ground_truth(small_truth(9));
  std::vector<SparseDistribution> fitted{truth.distribution(2), truth.distribution(0),
                                         truth.distribution(3), truth.distribution(1)};
  EXPECT_EQ(match_topics(fitted, truth), (std::vector<int>{2, 0, 3, 1}));
}

TEST(TruthJson, RoundTrip) {
  oracle::TempDir dir("truth");
  const auto truth = make_ground_truth(small_truth(10));
  write_truth_json(truth, dir / "truth.json");
  const auto back = read_truth_json(dir / "truth.json");
  EXPECT_EQ(back.phi, truth.phi);
  EXPECT_EQ(back.weights, truth.weights);
  EXPECT_EQ(back.support, truth.support);
  EXPECT_EQ(back.intercept, truth.intercept);
  EXPECT_EQ(back.seed, truth.seed);
}

TEST(Bundle, WritesLoadableFiles) {
  oracle::TempDir dir("bundle");
  BundleOptions o;
  o.truth = small_truth(11);
  o.corpus = small_corpus();
  o.lda_topics = 4;
  const auto bundle = make_bundle(o);
  write_bundle(bundle, dir.path());
  for (const char* f : {"news.jsonl", "market.csv", "truth.json", "config.ini"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  }
  const auto ingested = ingest_file(dir / "news.jsonl", {});
  EXPECT_EQ(ingested.records.size(), bundle.news.records.size());
  EXPECT_EQ(ingested.skipped, 0u);
  EXPECT_EQ(bundle.config.lda.num_topics, 4u);
}
