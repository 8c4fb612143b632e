#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "newsflow/attribution.hpp"
#include "newsflow/config.hpp"
#include "newsflow/corpus.hpp"
#include "newsflow/lda.hpp"
#include "newsflow/market.hpp"
#include "newsflow/topic_graph.hpp"
#include "newsflow/topic_series.hpp"

namespace newsflow {

/// Artifact file names inside an output directory.
namespace artifact {
inline constexpr const char* kVocabulary = "corpus_vocabulary.tsv";
inline constexpr const char* kDocuments = "corpus_documents.tsv";
inline constexpr const char* kPhi = "lda_phi.bin";
inline constexpr const char* kAssignments = "lda_assignments.txt";
inline constexpr const char* kLogLikelihood = "lda_loglik.csv";
inline constexpr const char* kTopicWords = "topic_words.csv";
inline constexpr const char* kTopicSeries = "topic_series.csv";
inline constexpr const char* kPruneReport = "prune_report.csv";
inline constexpr const char* kVolume = "volume.csv";
inline constexpr const char* kPeakWindows = "peak_windows.csv";
inline constexpr const char* kLambda = "lambda_cv.csv";
inline constexpr const char* kFitJson = "fit.json";
inline constexpr const char* kFitCsv = "fit.csv";
inline constexpr const char* kSummary = "summary.json";
inline constexpr const char* kGraphStem = "topic_graph";
inline constexpr const char* kFig1 = "fig1_volume_vs_news.csv";
inline constexpr const char* kFig3 = "fig3_topic_news_volume.csv";
inline constexpr const char* kFig4 = "fig4_peak_days.csv";
inline constexpr const char* kFig5 = "fig5_fitted_volume.csv";
inline constexpr const char* kCheckpoint = "checkpoint.json";
inline constexpr const char* kManifest = "manifest.json";
inline constexpr const char* kConfig = "config.ini";
}  // namespace artifact

/// Output of steps 1 and 2: the corpus, its topics and their news volume.
struct NewsSide {
  std::size_t records = 0;  // records matching the term inside the period
  Corpus corpus;
  TopicModel model;
  TopicSeries series;
  PruneReport prune;
  bool resumed = false;  // corpus and topics came from a checkpoint
};

/// Normalized volume and peak days.
struct MarketSide {
  MarketSeries market;
  VolumeSeries volume;
  PeakSet peaks;
};

/// Steps 3 and 4.
struct AttributionResult {
  Design design;
  LambdaChoice lambda;
  RegressionFit fit;           // all kept topics
  TopicSelection selection;
  RegressionFit selected_fit;  // weights outside the selection set to zero
  EvaluationReport report;
};

struct PipelineResult {
  NewsSide news;
  MarketSide market;
  AttributionResult attribution;
  TopicGraph graph;
  std::filesystem::path output_dir;
};

struct RunOptions {
  /// Reuse the corpus and topic checkpoint when it matches the config.
  bool resume = true;
};

/// Stage names used in StageError.
std::vector<std::string> stage_names();

/// Last step prepare_news runs.
enum class NewsStage { corpus, topics, pruned };

/// Ingest, select, tokenize, fit LDA, count news volume and prune. Writes
/// the corresponding artifacts (and the checkpoint) into `out`.
NewsSide prepare_news(const PipelineConfig& config, const std::filesystem::path& out,
                      const RunOptions& options = {}, NewsStage until = NewsStage::pruned);
MarketSide prepare_market(const PipelineConfig& config, const std::filesystem::path& out);

/// Rebuild the two sides from the artifacts of an earlier run. Throws
/// DataError when an artifact is missing or malformed.
NewsSide load_news(const PipelineConfig& config, const std::filesystem::path& out);
MarketSide load_market(const std::filesystem::path& out);

/// Cross-validated lambda and the fit over all kept topics (step 3-a).
AttributionResult fit_stage(const PipelineConfig& config, const NewsSide& news,
                            const MarketSide& market, const std::filesystem::path& out);
/// FVE selection and FPE of `result.fit` (steps 3-b and 4); fills the rest
/// of `result` and writes the fit table, summary and figure data.
void evaluate_stage(const PipelineConfig& config, const NewsSide& news, const MarketSide& market,
                    AttributionResult& result, const std::filesystem::path& out,
                    bool null_mode = false);
AttributionResult attribute(const PipelineConfig& config, const NewsSide& news,
                            const MarketSide& market, const std::filesystem::path& out,
                            bool null_mode = false);

/// Graph of one stock's selected topics, exported next to its artifacts.
TopicGraph graph_stage(const PipelineConfig& config, const NewsSide& news,
                       const AttributionResult& result, const std::filesystem::path& out);

/// Steps 1 to 4 plus the topic graph of this stock. Validation errors
/// (ConfigError) come before any stage runs; a failure inside a stage is
/// rethrown as StageError naming it. Artifacts already written stay on disk
/// and the corpus/topic checkpoint lets a rerun resume.
PipelineResult run_pipeline(const PipelineConfig& config, const RunOptions& options = {});

struct NullSwapResult {
  EvaluationReport a_volume_b_news;
  EvaluationReport b_volume_a_news;
};

/// Both swap directions: the news side of one config against the market and
/// regression settings of the other. The study periods must match
/// (ConfigError otherwise). Outputs go under <A output>/null_swap/ in
/// a_volume_b_news/ and b_volume_a_news/; each news side keeps its
/// checkpoint in its own output directory.
NullSwapResult run_null_swap(const PipelineConfig& a, const PipelineConfig& b,
                             const RunOptions& options = {});

struct BatchEntry {
  std::string stock;
  bool ran = false;
  std::size_t records = 0;
  std::string skipped_reason;
  double fpe = 0.0;
};

/// Runs every config whose stock has at least study.min_records matching
/// records, in parallel over `threads` workers, then writes the combined
/// graph of all stocks to `combined_graph` (when not empty).
std::vector<BatchEntry> run_batch(const std::vector<PipelineConfig>& configs, unsigned threads,
                                  const std::filesystem::path& combined_graph = {});

/// Word lists named by the config, or the shipped defaults.
WordSet stopwords_for(const PipelineConfig& config);
WordSet boilerplate_words_for(const PipelineConfig& config);
WordSet market_words_for(const PipelineConfig& config);

}  // namespace newsflow
