#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "newsflow/attribution.hpp"
#include "newsflow/corpus.hpp"
#include "newsflow/date.hpp"
#include "newsflow/lda.hpp"
#include "newsflow/market.hpp"
#include "newsflow/topic_graph.hpp"
#include "newsflow/topic_series.hpp"

namespace newsflow {

struct PathsConfig {
  std::filesystem::path news;
  std::filesystem::path market;
  // Empty word-list paths select the lists shipped with the library.
  std::filesystem::path stopwords;
  std::filesystem::path boilerplate_words;
  std::filesystem::path market_words;
  std::filesystem::path output_dir;
};

struct StudyConfig {
  std::string stock;
  std::string company;
  std::string term;
  DateRange period;
  std::uint64_t seed = 0;
  std::size_t min_records = 5000;
  unsigned threads = 1;
};

struct MarketConfig {
  std::size_t median_window = 504;
  WindowAlignment alignment = WindowAlignment::centered;
};

struct PeaksConfig {
  int window_months = 6;
  double percentile = 95.0;
};

struct RegressionConfig {
  std::size_t folds = 10;
  std::size_t repeats = 100;
  std::size_t grid_points = 100;
  double grid_ratio = 1e-4;
  double fve_threshold = 0.005;
  double fpe_ratio = 0.10;
  LassoOptions solver;
};

struct GraphConfig {
  double jsd_threshold = 0.5;
  GraphFormat format = GraphFormat::gexf;
};

/// Everything a run depends on. Defaults follow the published study.
struct PipelineConfig {
  PathsConfig paths;
  StudyConfig study;
  RecordSchema schema;
  LdaConfig lda;
  PruneRules prune;
  MarketConfig market;
  PeaksConfig peaks;
  RegressionConfig regression;
  GraphConfig graph;

  /// Range and consistency checks on the values alone. Throws ConfigError.
  void validate() const;
  /// Checks that every input file exists. Throws ConfigError.
  void check_inputs() const;
  /// Seed of the LDA chain and of cross-validation, derived from study.seed.
  std::uint64_t lda_seed() const { return derive_seed(study.seed, 1); }
  std::uint64_t cv_seed() const { return derive_seed(study.seed, 2); }
};

/// INI with sections [paths] [study] [schema] [lda] [prune] [market] [peaks]
/// [regression] [graph]. Unknown sections or keys are errors. Relative paths
/// resolve against the directory of the file. Throws ConfigError.
PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {});

/// Every key in a fixed order, so equal configs give equal text.
std::string canonical_config(const PipelineConfig& config);
void save_config(const PipelineConfig& config, const std::filesystem::path& path);

/// 64-bit FNV-1a of `text`, as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view text);
std::string config_hash(const PipelineConfig& config);

}  // namespace newsflow
