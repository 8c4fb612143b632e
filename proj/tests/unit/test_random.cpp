#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "newsflow/parallel.hpp"
#include "newsflow/random.hpp"

using namespace newsflow;

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next(), b.next());
  EXPECT_NE(Rng(42).next(), Rng(43).next());
}

TEST(Rng, EngineMatchesStandardSequence) {
  // The 10000th output of a default-seeded mt19937_64 is fixed by the standard.
  Rng rng(5489u);
  std::uint64_t x = 0;
  for (int i = 0; i < 10000; ++i) x = rng.next();
  EXPECT_EQ(x, 9981545732273789042ULL);
}

TEST(Rng, UniformRangeAndMean) {
  Rng rng(1);
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / n, 0.5, 0.005);
}

TEST(Rng, UniformIndexCoversRangeEvenly) {
  Rng rng(2);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) ++counts[rng.uniform_index(7)];
  for (const int c : counts) EXPECT_NEAR(c, 10000, 500);
}

TEST(Rng, NormalMoments) {
  Rng rng(3);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sq / n, 1.0, 0.02);
}

TEST(Rng, GammaMeanEqualsShape) {
  Rng rng(4);
  for (const double shape : {0.1, 0.5, 1.0, 2.5, 10.0}) {
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
      const double g = rng.gamma(shape);
      ASSERT_GE(g, 0.0);
      sum += g;
    }
    EXPECT_NEAR(sum / n, shape, 0.03 * std::max(1.0, shape)) << "shape " << shape;
  }
}

TEST(Rng, DirichletIsOnSimplex) {
  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    const auto p = rng.symmetric_dirichlet(0.1, 10);
    ASSERT_EQ(p.size(), 10u);
    EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-12);
    for (const double v : p) EXPECT_GE(v, 0.0);
  }
}

TEST(Rng, CategoricalFollowsWeights) {
  Rng rng(6);
  const std::vector<double> w{1.0, 0.0, 3.0};
  std::vector<int> counts(3, 0);
  for (int i = 0; i < 40000; ++i) ++counts[rng.categorical(w)];
  EXPECT_EQ(counts[1], 0);
  EXPECT_NEAR(counts[0], 10000, 400);
  EXPECT_NEAR(counts[2], 30000, 400);
}

TEST(Rng, ShuffleIsPermutation) {
  Rng rng(7);
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  rng.shuffle(v);
  EXPECT_EQ(std::set<int>(v.begin(), v.end()).size(), 50u);
}

TEST(Rng, DerivedSeedsDiffer) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 1000; ++s) seen.insert(derive_seed(7, s));
  EXPECT_EQ(seen.size(), 1000u);
  EXPECT_EQ(derive_seed(7, 3), derive_seed(7, 3));
}

TEST(Parallel, ResultsIndependentOfThreads) {
  for (const unsigned threads : {1u, 2u, 4u}) {
    std::vector<std::uint64_t> out(100);
    parallel_for(out.size(), threads, [&](std::size_t i) { out[i] = Rng(derive_seed(1, i)).next(); });
    for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out[i], Rng(derive_seed(1, i)).next());
  }
}

TEST(Parallel, RethrowsFirstFailure) {
  EXPECT_THROW(parallel_for(10, 3,
                            [](std::size_t i) {
                              if (i == 5) throw std::runtime_error("boom");
                            }),
               std::runtime_error);
}
