#include <gtest/gtest.h>

#include <fstream>

#include "newsflow/error.hpp"
#include "newsflow/pipeline.hpp"
#include "newsflow/synth.hpp"
#include "oracles.hpp"

using namespace newsflow;
namespace fs = std::filesystem;

namespace {

BundleOptions small_bundle(std::uint64_t seed, std::string term = "acme") {
  BundleOptions o;
  o.truth.num_topics = 4;
  o.truth.vocab_size = 80;
  o.truth.causal_topics = 2;
  o.truth.noise_sigma = 5.0;
  o.truth.seed = seed;
  o.corpus.days = 120;
  o.corpus.docs_per_day_min = o.corpus.docs_per_day_max = 10;
  o.corpus.term = term;
  o.lda_topics = 4;
  o.burn_in_iterations = 60;
  o.min_active_days = 20;
  return o;
}

PipelineConfig write_and_load(const BundleOptions& o, const fs::path& dir) {
  write_bundle(make_bundle(o), dir);
  auto c = load_config(dir / "config.ini");
  c.regression.folds = 5;
  c.regression.repeats = 4;
  c.regression.grid_points = 30;
  return c;
}

std::string file(const fs::path& p) { return oracle::read_file(p); }

class Pipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new oracle::TempDir("pipeline");
    config_ = new PipelineConfig(write_and_load(small_bundle(1), dir_->path() / "a"));
  }
  static void TearDownTestSuite() {
    delete config_;
    delete dir_;
  }
  static PipelineConfig with_output(const std::string& name) {
    auto c = *config_;
    c.paths.output_dir = dir_->path() / name;
    return c;
  }
  static oracle::TempDir* dir_;
  static PipelineConfig* config_;
};

oracle::TempDir* Pipeline::dir_ = nullptr;
PipelineConfig* Pipeline::config_ = nullptr;

}  // namespace

TEST_F(Pipeline, WritesEveryArtifact) {
  const auto c = with_output("full");
  const auto r = run_pipeline(c);
  for (const char* name :
       {artifact::kVocabulary, artifact::kDocuments, artifact::kPhi, artifact::kAssignments,
        artifact::kLogLikelihood, artifact::kTopicWords, artifact::kTopicSeries,
        artifact::kPruneReport, artifact::kVolume, artifact::kPeakWindows, artifact::kLambda,
        artifact::kFitJson, artifact::kFitCsv, artifact::kSummary, artifact::kFig1, artifact::kFig3,
        artifact::kFig4, artifact::kFig5, artifact::kCheckpoint, artifact::kManifest,
        artifact::kConfig}) {
    EXPECT_TRUE(fs::exists(c.paths.output_dir / name)) << name;
  }
  EXPECT_TRUE(fs::exists(c.paths.output_dir / "topic_graph.gexf"));
  EXPECT_FALSE(r.news.resumed);
  EXPECT_EQ(r.news.records, 1200u);
  EXPECT_GT(r.attribution.report.total_peaks, 0u);
  EXPECT_FALSE(r.attribution.report.null_mode);
  for (const int k : r.attribution.selection.selected) {
    EXPECT_NE(std::find(r.attribution.fit.topic_ids.begin(), r.attribution.fit.topic_ids.end(), k),
              r.attribution.fit.topic_ids.end());
  }
  const auto manifest = file(c.paths.output_dir / artifact::kManifest);
  EXPECT_NE(manifest.find("config_hash"), std::string::npos);
  EXPECT_NE(manifest.find("spdlog"), std::string::npos);
}

TEST_F(Pipeline, SameSeedGivesIdenticalOutputs) {
  const auto a = with_output("det_a");
  const auto b = with_output("det_b");
  run_pipeline(a, {false});
  run_pipeline(b, {false});
  for (const char* name : {artifact::kSummary, artifact::kFitCsv, artifact::kFitJson,
                           artifact::kLambda, artifact::kTopicSeries, artifact::kAssignments,
                           artifact::kPhi, "topic_graph.gexf"}) {
    EXPECT_EQ(file(a.paths.output_dir / name), file(b.paths.output_dir / name)) << name;
  }
}

TEST_F(Pipeline, ResumeMatchesCleanRun) {
  const auto c = with_output("resume");
  const auto first = run_pipeline(c);
  const auto summary = file(c.paths.output_dir / artifact::kSummary);
  const auto graph = file(c.paths.output_dir / "topic_graph.gexf");
  const auto second = run_pipeline(c);
  EXPECT_TRUE(second.news.resumed);
  EXPECT_EQ(file(c.paths.output_dir / artifact::kSummary), summary);
  EXPECT_EQ(file(c.paths.output_dir / "topic_graph.gexf"), graph);
  EXPECT_EQ(second.attribution.report, first.attribution.report);

  // A changed LDA setting invalidates the checkpoint.
  auto changed = c;
  changed.lda.burn_in_iterations = 61;
  EXPECT_FALSE(run_pipeline(changed).news.resumed);
}

TEST_F(Pipeline, InterruptedRunResumes) {
  const auto c = with_output("interrupted");
  fs::create_directories(c.paths.output_dir);
  prepare_news(c, c.paths.output_dir, {}, NewsStage::topics);
  EXPECT_TRUE(fs::exists(c.paths.output_dir / artifact::kCheckpoint));
  EXPECT_FALSE(fs::exists(c.paths.output_dir / artifact::kSummary));
  const auto resumed = run_pipeline(c);
  EXPECT_TRUE(resumed.news.resumed);
  const auto clean = with_output("interrupted_clean");
  run_pipeline(clean, {false});
  EXPECT_EQ(file(c.paths.output_dir / artifact::kSummary),
            file(clean.paths.output_dir / artifact::kSummary));
}

TEST_F(Pipeline, MissingMarketFileFailsBeforeLda) {
  auto c = with_output("missing_market");
  c.paths.market = dir_->path() / "nope.csv";
  EXPECT_THROW(run_pipeline(c), ConfigError);
  EXPECT_FALSE(fs::exists(c.paths.output_dir / artifact::kPhi));
}

TEST_F(Pipeline, MalformedMarketIsStageError) {
  auto c = with_output("bad_market");
  c.paths.market = dir_->path() / "bad_market.csv";
  {
    std::ofstream out(c.paths.market);
    out << "date,volume\n2010-01-01,abc\n";
  }
  try {
    run_pipeline(c);
    FAIL() << "expected StageError";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "normalize");
  }
  // Earlier stages left their artifacts behind.
  EXPECT_TRUE(fs::exists(c.paths.output_dir / artifact::kCheckpoint));
}

TEST_F(Pipeline, SelfSwapEqualsNormalRun) {
  const auto c = with_output("self");
  const auto normal = run_pipeline(c).attribution.report;
  const auto swap = run_null_swap(c, c);
  auto expected = normal;
  expected.null_mode = true;
  EXPECT_EQ(swap.a_volume_b_news, expected);
  EXPECT_EQ(swap.b_volume_a_news, expected);
  EXPECT_TRUE(fs::exists(c.paths.output_dir / "null_swap/a_volume_b_news" / artifact::kSummary));
}

TEST_F(Pipeline, SwapNeedsEqualPeriods) {
  auto a = with_output("swap_a");
  auto b = with_output("swap_b");
  b.study.period.last = b.study.period.last.add_days(-1);
  EXPECT_THROW(run_null_swap(a, b), ConfigError);
}

TEST_F(Pipeline, StagesCanBeReloaded) {
  const auto c = with_output("reload");
  const auto full = run_pipeline(c);
  const auto news = load_news(c, c.paths.output_dir);
  const auto market = load_market(c.paths.output_dir);
  EXPECT_EQ(news.model.assignments(), full.news.model.assignments());
  EXPECT_EQ(market.peaks.peaks, full.market.peaks.peaks);
  const auto again = attribute(c, news, market, dir_->path() / "reload_attr");
  EXPECT_EQ(again.report, full.attribution.report);
  EXPECT_THROW(load_market(dir_->path() / "empty"), DataError);
}

TEST(Batch, MinRecordsFilter) {
  oracle::TempDir dir("batch");
  auto big = write_and_load(small_bundle(2, "big"), dir / "big");
  auto small = write_and_load(small_bundle(3, "small"), dir / "small");
  big.study.min_records = 1000;
  small.study.min_records = 5000;
  const auto entries = run_batch({big, small}, 1, dir / "combined.gexf");
  ASSERT_EQ(entries.size(), 2u);
  EXPECT_TRUE(entries[0].ran);
  EXPECT_EQ(entries[0].records, 1200u);
  EXPECT_FALSE(entries[1].ran);
  EXPECT_FALSE(entries[1].skipped_reason.empty());
  EXPECT_FALSE(fs::exists(small.paths.output_dir / artifact::kSummary));
  const auto graph = read_gexf(dir / "combined.gexf");
  for (const auto& n : graph.nodes) EXPECT_EQ(n.id.find("small"), std::string::npos);
  EXPECT_FALSE(graph.nodes.empty());
}

TEST(WordLists, DefaultsAndFiles) {
  oracle::TempDir dir("words");
  PipelineConfig c;
  EXPECT_TRUE(stopwords_for(c).count("the"));
  EXPECT_TRUE(market_words_for(c).count("stocks"));
  {
    std::ofstream out(dir / "stop.txt");
    out << "acme\n";
  }
  c.paths.stopwords = dir / "stop.txt";
  EXPECT_EQ(stopwords_for(c), WordSet{"acme"});
  EXPECT_EQ(stage_names().front(), "ingest");
}
