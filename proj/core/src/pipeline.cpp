#include "newsflow/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <mutex>
#include <sstream>

#include <boost/version.hpp>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "newsflow/error.hpp"
#include "newsflow/parallel.hpp"
#include "newsflow/tabular.hpp"

namespace newsflow {

namespace {

using nlohmann::ordered_json;

template <typename F>
auto stage(const char* name, F&& body) {
  try {
    spdlog::debug("stage {}", name);
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

std::string file_digest(const std::filesystem::path& path) {
  if (path.empty()) return "-";
  auto in = open_input(path, std::ios::in | std::ios::binary);
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return fnv1a_hex(content);
}

/// Identifies everything the corpus and topic checkpoint depends on.
std::string news_key(const PipelineConfig& c) {
  std::ostringstream key;
  key << file_digest(c.paths.news) << '|' << file_digest(c.paths.stopwords) << '|'
      << c.study.term << '|' << c.study.period.first.iso() << '|' << c.study.period.last.iso()
      << '|' << c.study.seed << '|' << c.schema.id_field << '|' << c.schema.timestamp_field << '|'
      << c.schema.headline_field << '|' << c.schema.body_field << '|'
      << c.schema.utc_offset.count() << '|' << c.schema.strict << '|' << c.lda.num_topics << '|'
      << (c.lda.alpha ? format_double(*c.lda.alpha) : "auto") << '|' << format_double(c.lda.beta)
      << '|' << c.lda.burn_in_iterations;
  return fnv1a_hex(key.str());
}

void write_json(const ordered_json& j, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << j.dump(2) << '\n';
  if (!out) throw Error("write failed: " + path.string());
}

std::vector<std::string> iso_dates(const std::vector<Date>& dates) {
  std::vector<std::string> out;
  out.reserve(dates.size());
  for (const auto d : dates) out.push_back(d.iso());
  return out;
}

void write_checkpoint(const std::filesystem::path& out, const std::string& key,
                      std::size_t records, const std::vector<std::string>& stages) {
  ordered_json j;
  j["news_key"] = key;
  j["records"] = records;
  j["stages"] = stages;
  write_json(j, out / artifact::kCheckpoint);
}

struct Checkpoint {
  std::size_t records = 0;
  bool corpus = false;
  bool topics = false;
};

Checkpoint read_checkpoint(const std::filesystem::path& out, const std::string& key) {
  Checkpoint cp;
  const auto path = out / artifact::kCheckpoint;
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return cp;
  try {
    std::ifstream in(path);
    const auto j = nlohmann::json::parse(in);
    if (j.at("news_key").get<std::string>() != key) return cp;
    cp.records = j.at("records").get<std::size_t>();
    for (const auto& s : j.at("stages")) {
      if (s == "tokenize") cp.corpus = true;
      if (s == "lda") cp.topics = true;
    }
  } catch (const std::exception& e) {
    spdlog::warn("ignoring unreadable checkpoint {}: {}", path.string(), e.what());
    return {};
  }
  const auto have = [&](const char* name) { return std::filesystem::exists(out / name, ec); };
  cp.corpus = cp.corpus && have(artifact::kVocabulary) && have(artifact::kDocuments);
  cp.topics = cp.corpus && cp.topics && have(artifact::kPhi) && have(artifact::kAssignments);
  return cp;
}

void write_loglik(const TopicModel& model, std::size_t interval, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "sweep,log_likelihood\n";
  const auto& trace = model.log_likelihood_trace();
  for (std::size_t i = 0; i < trace.size(); ++i) {
    out << (i + 1) * interval << ',' << format_double(trace[i]) << '\n';
  }
  if (!out) throw Error("write failed: " + path.string());
}

void write_topic_words(const TopicModel& model, const Vocabulary& vocabulary, std::size_t n,
                       const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "topic_id,rank,word,probability\n";
  for (std::size_t k = 0; k < model.num_topics(); ++k) {
    const auto row = model.topic_distribution(k);
    const auto words = model.top_words(k, n);
    for (std::size_t r = 0; r < words.size(); ++r) {
      out << k << ',' << r + 1 << ',' << vocabulary.token(words[r]) << ','
          << format_double(row[words[r]]) << '\n';
    }
  }
  if (!out) throw Error("write failed: " + path.string());
}

std::size_t count_matching(const PipelineConfig& config, std::vector<NewsRecord>* keep) {
  auto ingested = ingest_file(config.paths.news, config.schema);
  if (ingested.skipped > 0) {
    spdlog::warn("{}: skipped {} malformed record(s)", config.paths.news.string(), ingested.skipped);
  }
  auto selected = select_in_period(select_by_term(ingested.records, config.study.term),
                                   config.study.period);
  const std::size_t n = selected.size();
  if (keep) *keep = std::move(selected);
  return n;
}

MarketSeries restrict_market(const MarketSeries& market, const DateRange& period) {
  MarketSeries out;
  for (std::size_t t = 0; t < market.dates.size(); ++t) {
    if (period.contains(market.dates[t])) {
      out.dates.push_back(market.dates[t]);
      out.volume.push_back(market.volume[t]);
    }
  }
  return out;
}

void write_fit_csv(const AttributionResult& r, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "topic_id,weight,fve,selected\n";
  const auto& sel = r.selection;
  for (std::size_t k = 0; k < r.fit.topic_ids.size(); ++k) {
    const int id = r.fit.topic_ids[k];
    const bool chosen = std::find(sel.selected.begin(), sel.selected.end(), id) != sel.selected.end();
    out << id << ',' << format_double(r.fit.weights[k]) << ',' << format_double(sel.fve[k]) << ','
        << (chosen ? 1 : 0) << '\n';
  }
  if (!out) throw Error("write failed: " + path.string());
}

void write_lambda_csv(const LambdaChoice& choice, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "repeat,grid_index,lambda\n";
  for (std::size_t r = 0; r < choice.per_repeat.size(); ++r) {
    out << r << ',' << choice.winner_index[r] << ',' << format_double(choice.per_repeat[r]) << '\n';
  }
  if (!out) throw Error("write failed: " + path.string());
}

void write_summary(const PipelineConfig& config, const AttributionResult& r,
                   const std::filesystem::path& path) {
  ordered_json j;
  j["stock"] = config.study.stock;
  j["null_mode"] = r.report.null_mode;
  j["lambda"] = r.fit.lambda;
  j["intercept"] = r.fit.intercept;
  j["kept_topics"] = r.fit.topic_ids;
  j["selected_topics"] = r.selection.selected;
  j["fve_degenerate"] = r.selection.degenerate;
  j["fpe"] = r.report.fpe;
  j["total_peaks"] = r.report.total_peaks;
  j["explained_peaks"] = r.report.explained_peaks.size();
  j["degenerate_peaks"] = r.report.degenerate_peaks;
  j["explained_peak_dates"] = iso_dates(r.report.explained_peaks);
  write_json(j, path);
}

void write_figures(const NewsSide& news, const MarketSide& market, const AttributionResult& r,
                   const std::filesystem::path& out) {
  {
    auto f = open_output(out / artifact::kFig1);
    f << "date,trading_volume,news_volume\n";
    for (std::size_t t = 0; t < market.volume.size(); ++t) {
      const auto day = news.series.index_of(market.volume.dates[t]);
      const std::int64_t words = day < 0 ? 0 : news.series.day_total(static_cast<std::size_t>(day));
      f << market.volume.dates[t].iso() << ',' << market.volume.raw[t] << ',' << words << '\n';
    }
  }
  {
    auto f = open_output(out / artifact::kFig3);
    const auto kept = news.prune.kept_topics();
    f << "date";
    for (const int k : kept) f << ",topic_" << k;
    f << '\n';
    for (std::size_t t = 0; t < news.series.num_days(); ++t) {
      f << news.series.dates()[t].iso();
      for (const int k : kept) f << ',' << news.series.at(static_cast<std::size_t>(k), t);
      f << '\n';
    }
  }
  {
    auto f = open_output(out / artifact::kFig4);
    f << "date,normalized_volume,is_peak\n";
    for (std::size_t t = 0; t < market.volume.size(); ++t) {
      const Date d = market.volume.dates[t];
      f << d.iso() << ',' << format_double(market.volume.normalized[t]) << ','
        << (market.peaks.contains(d) ? 1 : 0) << '\n';
    }
  }
  {
    auto f = open_output(out / artifact::kFig5);
    f << "date,observed,fitted\n";
    const auto& d = r.design;
    for (std::size_t t = 0; t < d.rows(); ++t) {
      const double fitted = d.y[t] - r.selected_fit.residuals[t];
      f << d.dates[t].iso() << ',' << format_double(d.y[t]) << ',' << format_double(fitted) << '\n';
    }
  }
}

void write_manifest(const PipelineConfig& config, const std::filesystem::path& out, bool null_mode,
                    bool resumed) {
  ordered_json j;
  j["tool"] = "newsflow";
  j["version"] = NEWSFLOW_VERSION;
  j["config_hash"] = config_hash(config);
  j["seed"] = config.study.seed;
  j["lda_seed"] = config.lda_seed();
  j["cv_seed"] = config.cv_seed();
  j["null_mode"] = null_mode;
  j["resumed_from_checkpoint"] = resumed;
  j["stages"] = stage_names();
  j["libraries"] = {{"spdlog", std::to_string(SPDLOG_VER_MAJOR) + "." +
                                   std::to_string(SPDLOG_VER_MINOR) + "." +
                                   std::to_string(SPDLOG_VER_PATCH)},
                    {"boost", BOOST_LIB_VERSION},
                    {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                          std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                          std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
  write_json(j, out / artifact::kManifest);
}

WordSet word_list(const std::filesystem::path& path, std::string_view fallback) {
  return path.empty() ? parse_word_list(fallback) : load_word_list(path);
}

StockTopics topics_for_graph(const PipelineConfig& config, const NewsSide& news,
                             const AttributionResult& r) {
  return stock_topics(config.study.stock, config.study.company, news.model,
                      news.corpus.vocabulary(), r.selection);
}

}  // namespace

std::vector<std::string> stage_names() {
  return {"ingest", "tokenize", "lda",     "news_volume", "prune", "normalize", "peaks",
          "lambda", "fit",      "fve",     "fpe",         "graph"};
}

WordSet stopwords_for(const PipelineConfig& c) {
  return word_list(c.paths.stopwords, default_stopwords_text());
}
WordSet boilerplate_words_for(const PipelineConfig& c) {
  return word_list(c.paths.boilerplate_words, default_boilerplate_text());
}
WordSet market_words_for(const PipelineConfig& c) {
  return word_list(c.paths.market_words, default_market_words_text());
}

NewsSide prepare_news(const PipelineConfig& config, const std::filesystem::path& out,
                      const RunOptions& options, NewsStage until) {
  NewsSide news;
  const auto key = news_key(config);
  const auto cp = options.resume ? read_checkpoint(out, key) : Checkpoint{};

  if (cp.corpus) {
    news.records = cp.records;
    news.corpus = stage("tokenize", [&] {
      return load_corpus(out / artifact::kVocabulary, out / artifact::kDocuments, config.study.term);
    });
    spdlog::info("{}: resumed corpus of {} documents from checkpoint", config.study.stock,
                 news.corpus.size());
  } else {
    std::vector<NewsRecord> records;
    news.records = stage("ingest", [&] { return count_matching(config, &records); });
    spdlog::info("{}: {} records match '{}'", config.study.stock, news.records, config.study.term);
    news.corpus = stage("tokenize", [&] {
      auto corpus = tokenize(records, stopwords_for(config), config.study.term, config.study.threads);
      if (corpus.empty()) throw DataError("no document left after selection and tokenization");
      save_corpus(corpus, out / artifact::kVocabulary, out / artifact::kDocuments);
      write_checkpoint(out, key, news.records, {"tokenize"});
      return corpus;
    });
  }

  if (until == NewsStage::corpus) return news;
  if (cp.topics) {
    news.model = stage("lda", [&] {
      return load_topic_model(news.corpus, out / artifact::kPhi, out / artifact::kAssignments);
    });
    news.resumed = true;
    spdlog::info("{}: resumed {} topics from checkpoint", config.study.stock, news.model.num_topics());
  } else {
    news.model = stage("lda", [&] {
      LdaConfig lda = config.lda;
      lda.seed = config.lda_seed();
      auto model = fit_lda(news.corpus, lda, [&](const GibbsSampler& s) {
        if (s.sweeps_done() % 100 == 0) {
          spdlog::info("{}: lda sweep {}/{}", config.study.stock, s.sweeps_done(),
                       lda.burn_in_iterations);
        }
      });
      save_phi(model, out / artifact::kPhi);
      save_assignments(news.corpus, model, out / artifact::kAssignments);
      write_loglik(model, lda.loglik_interval, out / artifact::kLogLikelihood);
      write_checkpoint(out, key, news.records, {"tokenize", "lda"});
      return model;
    });
  }
  stage("lda", [&] {
    write_topic_words(news.model, news.corpus.vocabulary(), config.prune.top_words,
                      out / artifact::kTopicWords);
    return 0;
  });
  if (until == NewsStage::topics) return news;

  news.series = stage("news_volume", [&] {
    auto series = news_volume(news.model, news.corpus, config.study.period);
    write_topic_series_csv(series, out / artifact::kTopicSeries);
    return series;
  });
  news.prune = stage("prune", [&] {
    auto report = prune(news.model, news.corpus.vocabulary(), news.series,
                        boilerplate_words_for(config), market_words_for(config), config.prune);
    write_prune_report_csv(report, out / artifact::kPruneReport);
    return report;
  });
  return news;
}

MarketSide prepare_market(const PipelineConfig& config, const std::filesystem::path& out) {
  MarketSide side;
  side.volume = stage("normalize", [&] {
    side.market = restrict_market(read_market_csv(config.paths.market), config.study.period);
    if (side.market.dates.empty()) throw DataError("no market data inside the study period");
    return moving_median_normalize(side.market, config.market.median_window, config.market.alignment);
  });
  side.peaks = stage("peaks", [&] {
    auto peaks = detect_peaks(side.volume, config.study.period.first, config.peaks.window_months,
                              config.peaks.percentile, config.study.period.last);
    write_volume_csv(side.volume, &peaks, out / artifact::kVolume);
    write_peak_windows_csv(peaks, out / artifact::kPeakWindows);
    return peaks;
  });
  return side;
}

NewsSide load_news(const PipelineConfig& config, const std::filesystem::path& out) {
  NewsSide news;
  news.corpus = load_corpus(out / artifact::kVocabulary, out / artifact::kDocuments, config.study.term);
  news.model = load_topic_model(news.corpus, out / artifact::kPhi, out / artifact::kAssignments);
  news.series = read_topic_series_csv(out / artifact::kTopicSeries);
  news.prune = read_prune_report_csv(out / artifact::kPruneReport);
  news.records = news.corpus.size();
  news.resumed = true;
  return news;
}

MarketSide load_market(const std::filesystem::path& out) {
  MarketSide side;
  side.volume = read_volume_csv(out / artifact::kVolume);
  side.peaks = read_peaks(out / artifact::kVolume, out / artifact::kPeakWindows);
  side.market.dates = side.volume.dates;
  side.market.volume = side.volume.raw;
  return side;
}

AttributionResult fit_stage(const PipelineConfig& config, const NewsSide& news,
                            const MarketSide& market, const std::filesystem::path& out) {
  AttributionResult r;
  const auto kept = news.prune.kept_topics();
  r.lambda = stage("lambda", [&] {
    r.design = build_design(news.series, kept, market.volume);
    CvOptions cv;
    cv.folds = config.regression.folds;
    cv.repeats = config.regression.repeats;
    cv.grid_points = config.regression.grid_points;
    cv.grid_ratio = config.regression.grid_ratio;
    cv.seed = config.cv_seed();
    cv.threads = config.study.threads;
    cv.solver = config.regression.solver;
    auto choice = choose_lambda(r.design, cv);
    write_lambda_csv(choice, out / artifact::kLambda);
    return choice;
  });
  r.fit = stage("fit", [&] {
    auto fit = fit_nnlasso(r.design, r.lambda.lambda, config.regression.solver);
    fit.cv_trace = r.lambda.per_repeat;
    write_fit_json(fit, out / artifact::kFitJson);
    return fit;
  });
  return r;
}

void evaluate_stage(const PipelineConfig& config, const NewsSide& news, const MarketSide& market,
                    AttributionResult& r, const std::filesystem::path& out, bool null_mode) {
  r.selection = stage("fve", [&] {
    return compute_fve(r.fit, r.design, market.peaks, config.regression.fve_threshold);
  });
  stage("fpe", [&] {
    r.selected_fit = restrict_to(r.fit, r.design, r.selection.selected);
    r.report = compute_fpe(r.selected_fit, r.design, market.peaks, config.regression.fpe_ratio);
    r.report.null_mode = null_mode;
    write_fit_csv(r, out / artifact::kFitCsv);
    write_summary(config, r, out / artifact::kSummary);
    write_figures(news, market, r, out);
    return 0;
  });
  spdlog::info("{}: lambda {:.6g}, {} of {} topics selected, FPE {:.3f} ({}/{} peaks)",
               config.study.stock, r.fit.lambda, r.selection.selected.size(), r.fit.topic_ids.size(),
               r.report.fpe, r.report.explained_peaks.size(), r.report.total_peaks);
}

AttributionResult attribute(const PipelineConfig& config, const NewsSide& news,
                            const MarketSide& market, const std::filesystem::path& out,
                            bool null_mode) {
  auto r = fit_stage(config, news, market, out);
  evaluate_stage(config, news, market, r, out, null_mode);
  return r;
}

TopicGraph graph_stage(const PipelineConfig& config, const NewsSide& news,
                       const AttributionResult& result, const std::filesystem::path& out) {
  return stage("graph", [&] {
    const std::vector<StockTopics> stocks{topics_for_graph(config, news, result)};
    auto graph = build_graph(stocks, config.graph.jsd_threshold, config.study.threads);
    export_graph(graph, config.graph.format,
                 out / (std::string(artifact::kGraphStem) + "." +
                        std::string(extension(config.graph.format))));
    return graph;
  });
}

PipelineResult run_pipeline(const PipelineConfig& config, const RunOptions& options) {
  config.validate();
  config.check_inputs();
  PipelineResult result;
  result.output_dir = config.paths.output_dir;
  const auto& out = result.output_dir;
  stage("ingest", [&] {
    std::filesystem::create_directories(out);
    save_config(config, out / artifact::kConfig);
    return 0;
  });
  result.news = prepare_news(config, out, options);
  result.market = prepare_market(config, out);
  result.attribution = attribute(config, result.news, result.market, out, false);
  result.graph = graph_stage(config, result.news, result.attribution, out);
  write_manifest(config, out, false, result.news.resumed);
  return result;
}

NullSwapResult run_null_swap(const PipelineConfig& a, const PipelineConfig& b,
                             const RunOptions& options) {
  a.validate();
  b.validate();
  if (!(a.study.period == b.study.period)) {
    throw ConfigError("null swap needs equal study periods (" + a.study.period.first.iso() + ".." +
                      a.study.period.last.iso() + " vs " + b.study.period.first.iso() + ".." +
                      b.study.period.last.iso() + ")");
  }
  a.check_inputs();
  b.check_inputs();
  const auto base = a.paths.output_dir / "null_swap";
  const auto one_way = [&](const PipelineConfig& volume_side, const PipelineConfig& news_side,
                           const char* direction) {
    const auto out = base / direction;
    std::filesystem::create_directories(out);
    // The news checkpoint of the news-side stock is reused when present.
    const auto news_out = news_side.paths.output_dir;
    std::filesystem::create_directories(news_out);
    const auto news = prepare_news(news_side, news_out, options);
    const auto market = prepare_market(volume_side, out);
    auto r = attribute(volume_side, news, market, out, true);
    write_manifest(volume_side, out, true, news.resumed);
    return r.report;
  };
  NullSwapResult result;
  result.a_volume_b_news = one_way(a, b, "a_volume_b_news");
  result.b_volume_a_news = one_way(b, a, "b_volume_a_news");
  return result;
}

std::vector<BatchEntry> run_batch(const std::vector<PipelineConfig>& configs, unsigned threads,
                                  const std::filesystem::path& combined_graph) {
  for (const auto& c : configs) {
    c.validate();
    c.check_inputs();
  }
  std::vector<BatchEntry> entries(configs.size());
  std::vector<std::optional<StockTopics>> topics(configs.size());
  parallel_for(configs.size(), threads, [&](std::size_t i) {
    const auto& c = configs[i];
    auto& e = entries[i];
    e.stock = c.study.stock;
    e.records = stage("ingest", [&] { return count_matching(c, nullptr); });
    if (e.records < c.study.min_records) {
      e.skipped_reason = std::to_string(e.records) + " records, fewer than the required " +
                         std::to_string(c.study.min_records);
      spdlog::info("{}: skipped ({})", e.stock, e.skipped_reason);
      return;
    }
    const auto r = run_pipeline(c);
    e.ran = true;
    e.fpe = r.attribution.report.fpe;
    topics[i] = topics_for_graph(c, r.news, r.attribution);
  });
  if (!combined_graph.empty()) {
    std::vector<StockTopics> stocks;
    for (auto& t : topics) {
      if (t) stocks.push_back(std::move(*t));
    }
    const double threshold = configs.empty() ? 0.5 : configs.front().graph.jsd_threshold;
    const auto format = configs.empty() ? GraphFormat::gexf : configs.front().graph.format;
    stage("graph", [&] {
      export_graph(build_graph(stocks, threshold, threads), format, combined_graph);
      return 0;
    });
  }
  return entries;
}

}  // namespace newsflow
