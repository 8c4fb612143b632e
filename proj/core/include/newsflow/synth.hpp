#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "newsflow/config.hpp"
#include "newsflow/corpus.hpp"
#include "newsflow/lda.hpp"
#include "newsflow/market.hpp"
#include "newsflow/topic_graph.hpp"
#include "newsflow/topic_series.hpp"

namespace newsflow {

enum class NoiseKind { gaussian, student_t };

/// Known parameters of a synthetic news/volume pair.
struct GroundTruth {
  std::size_t num_topics = 0;
  std::size_t vocab_size = 0;
  std::vector<double> phi;  // num_topics x vocab_size, rows sum to 1
  double alpha = 0.1;       // symmetric document-topic prior
  std::vector<double> weights;  // nonnegative, one per topic
  std::vector<int> support;     // topics with a positive weight
  double intercept = 0.0;
  double noise_sigma = 0.0;
  NoiseKind noise = NoiseKind::gaussian;
  std::uint64_t seed = 0;

  /// Word w of every synthetic vocabulary is spelled "w<w>" zero-padded to 5 digits.
  static std::string word(std::size_t w);
  SparseDistribution distribution(std::size_t k) const;
  /// Throws ConfigError when shapes disagree, a phi row is not normalized
  /// or a weight is negative.
  void validate() const;
};

struct TruthOptions {
  std::size_t num_topics = 10;
  std::size_t vocab_size = 1000;
  /// Disjoint topics own equal consecutive word blocks; otherwise each phi
  /// row is drawn from a symmetric Dirichlet(topic_concentration).
  bool disjoint = true;
  double topic_concentration = 0.05;
  double alpha = 0.1;
  std::size_t causal_topics = 5;
  double weight_min = 2.0;
  double weight_max = 5.0;
  double intercept = 1000.0;
  double noise_sigma = 20.0;
  NoiseKind noise = NoiseKind::gaussian;
  std::uint64_t seed = 0;
};

/// Draws phi and a random causal support of `causal_topics` topics whose
/// weights are uniform in [weight_min, weight_max].
GroundTruth make_ground_truth(const TruthOptions& options);

struct CorpusOptions {
  Date start = Date::from_days(14610);  // 2010-01-01
  std::size_t days = 500;
  // Uniform daily counts with mean 50. A constant count would make the
  // topic volumes of every day sum to the same total.
  std::size_t docs_per_day_min = 25;
  std::size_t docs_per_day_max = 75;
  std::size_t doc_length_min = 10;
  std::size_t doc_length_max = 10;
  std::string term = "acme";
  std::string id_prefix = "doc";
};

struct SynthCorpus {
  std::vector<NewsRecord> records;
  Corpus corpus;  // vocabulary ids equal ground-truth word ids
  TopicAssignments true_assignments;
  DateRange period;
};

/// LDA generative process: per document theta ~ Dirichlet(alpha), then per
/// token a topic ~ theta and a word ~ phi[topic]. The headline carries the
/// query term and the body carries the words, so tokenize() of the records
/// gives back the same token sequence after the term.
SynthCorpus generate_corpus(const GroundTruth& truth, const CorpusOptions& options);

/// Per-day token counts of the true assignments over the whole period.
TopicSeries true_series(const GroundTruth& truth, const SynthCorpus& synth);

/// y(t) = b + sum_k w_k I_k(t) + noise, floored at 0 and rounded to whole
/// shares. Student-t noise has 3 degrees of freedom scaled by noise_sigma.
MarketSeries generate_volume(const GroundTruth& truth, const TopicSeries& series);

/// Minimum-cost assignment on a rows x cols matrix (row-major). Returns the
/// column assigned to each row, or -1 when rows > cols leaves it unmatched.
std::vector<int> hungarian(const std::vector<double>& cost, std::size_t rows, std::size_t cols);

/// Matches fitted topics to true topics by maximizing total 1 - JSD.
/// Entry i is the true topic of fitted topic i, or -1.
std::vector<int> match_topics(const std::vector<SparseDistribution>& fitted,
                              const GroundTruth& truth);

/// Fitted topic k of `model` as a distribution over the vocabulary's words.
SparseDistribution model_distribution(const TopicModel& model, const Vocabulary& vocabulary,
                                      std::size_t k);

struct BundleOptions {
  TruthOptions truth;
  CorpusOptions corpus;
  /// Settings written into the bundle's config.ini.
  std::size_t lda_topics = 10;
  std::size_t burn_in_iterations = 300;
  std::size_t min_active_days = 80;
  std::size_t min_records = 0;
};

struct Bundle {
  GroundTruth truth;
  SynthCorpus news;
  MarketSeries market;
  PipelineConfig config;
};

Bundle make_bundle(const BundleOptions& options);

/// Writes news.jsonl, market.csv, truth.json and config.ini (relative paths,
/// output into `<dir>/out`).
void write_bundle(const Bundle& bundle, const std::filesystem::path& dir);

void write_news_jsonl(const std::vector<NewsRecord>& records, const std::filesystem::path& path);
void write_truth_json(const GroundTruth& truth, const std::filesystem::path& path);
GroundTruth read_truth_json(const std::filesystem::path& path);

}  // namespace newsflow
