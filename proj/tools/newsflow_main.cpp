// Command line front end: one subcommand per pipeline step plus `run`.
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "newsflow/config.hpp"
#include "newsflow/error.hpp"
#include "newsflow/pipeline.hpp"
#include "newsflow/synth.hpp"
#include "newsflow/tabular.hpp"

namespace {

using namespace newsflow;

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> fve_threshold;
  std::optional<double> fpe_ratio;
  std::optional<std::size_t> folds;
  std::optional<std::size_t> repeats;
  std::optional<unsigned> threads;
  std::string output_dir;

  void attach(CLI::App& app) {
    app.add_option("--seed", seed, "Override study.seed");
    app.add_option("--fve-threshold", fve_threshold, "Override regression.fve_threshold");
    app.add_option("--fpe-ratio", fpe_ratio, "Override regression.fpe_ratio");
    app.add_option("--folds", folds, "Override regression.folds");
    app.add_option("--repeats", repeats, "Override regression.repeats");
    app.add_option("--threads", threads, "Override study.threads");
    app.add_option("-o,--out", output_dir, "Override paths.output_dir");
  }

  void apply(PipelineConfig& c) const {
    if (seed) c.study.seed = *seed;
    if (fve_threshold) c.regression.fve_threshold = *fve_threshold;
    if (fpe_ratio) c.regression.fpe_ratio = *fpe_ratio;
    if (folds) c.regression.folds = *folds;
    if (repeats) c.regression.repeats = *repeats;
    if (threads) c.study.threads = *threads;
    if (!output_dir.empty()) c.paths.output_dir = output_dir;
  }
};

PipelineConfig load(const std::string& path, const Overrides& overrides) {
  auto config = load_config(path);
  overrides.apply(config);
  config.validate();
  return config;
}

PipelineConfig load_checked(const std::string& path, const Overrides& overrides) {
  auto config = load(path, overrides);
  config.check_inputs();
  return config;
}

void print_report(const std::string& what, const EvaluationReport& report) {
  std::cout << what << ": fpe=" << format_double(report.fpe)
            << " explained=" << report.explained_peaks.size() << " peaks=" << report.total_peaks
            << (report.null_mode ? " null_mode" : "") << '\n';
}

AttributionResult load_fit(const PipelineConfig& config, const NewsSide& news,
                           const MarketSide& market) {
  AttributionResult r;
  r.design = build_design(news.series, news.prune.kept_topics(), market.volume);
  r.fit = read_fit_json(config.paths.output_dir / artifact::kFitJson, r.design);
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Attribute abnormal trading volume to news topics"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  Overrides overrides;
  std::string config_path;
  bool no_resume = false;

  const auto with_config = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "Pipeline config (INI)")->required();
    overrides.attach(*sub);
    return sub;
  };

  auto* ingest = with_config(app.add_subcommand("ingest", "Select, tokenize and save the corpus"));
  auto* topics = with_config(app.add_subcommand("topics", "Fit LDA on the saved corpus"));
  auto* prune_cmd = with_config(app.add_subcommand("prune", "Topic news volume and pruning"));
  auto* normalize = with_config(app.add_subcommand("normalize", "Moving-median volume normalization"));
  auto* peaks = with_config(app.add_subcommand("peaks", "Peak days per calendar window"));
  auto* fit = with_config(app.add_subcommand("fit", "Cross-validated nonnegative LASSO"));
  auto* evaluate = with_config(app.add_subcommand("evaluate", "FVE selection and FPE"));
  for (auto* sub : {ingest, topics, prune_cmd}) {
    sub->add_flag("--no-resume", no_resume, "Ignore the corpus/topic checkpoint");
  }

  auto* graph = app.add_subcommand("graph", "Topic graph across one or more stocks");
  std::vector<std::string> graph_configs;
  std::string graph_output;
  std::string graph_format;
  graph->add_option("-c,--config", graph_configs, "Configs of completed runs")->required();
  graph->add_option("--output", graph_output, "Graph file (default: <output_dir>/topic_graph.<ext>)");
  graph->add_option("--format", graph_format, "gexf, graphml or edge-list")
      ->check(CLI::IsMember({"gexf", "graphml", "edge-list"}));
  overrides.attach(*graph);

  auto* synth = app.add_subcommand("synth", "Write a synthetic bundle with known ground truth");
  BundleOptions bundle;
  std::string synth_dir;
  std::string noise = "gaussian";
  bool dirichlet_topics = false;
  std::size_t docs_per_day = 50;
  std::size_t doc_length = 10;
  synth->add_option("--dir", synth_dir, "Bundle directory")->required();
  synth->add_option("--seed", bundle.truth.seed, "Generator seed");
  synth->add_option("--topics", bundle.truth.num_topics, "True topics");
  synth->add_option("--causal", bundle.truth.causal_topics, "Topics with a positive weight");
  synth->add_option("--vocab", bundle.truth.vocab_size, "Vocabulary size");
  synth->add_option("--days", bundle.corpus.days, "Days");
  synth->add_option("--docs-per-day", docs_per_day, "Mean documents per day (uniform on [n/2, 3n/2])");
  synth->add_option("--doc-length", doc_length, "Tokens per document");
  synth->add_option("--sigma", bundle.truth.noise_sigma, "Volume noise scale");
  synth->add_option("--intercept", bundle.truth.intercept, "Volume intercept");
  synth->add_option("--noise", noise, "gaussian or student_t")
      ->check(CLI::IsMember({"gaussian", "student_t"}));
  synth->add_flag("--dirichlet-topics", dirichlet_topics, "Draw topics from a Dirichlet");
  synth->add_option("--term", bundle.corpus.term, "Query term");
  synth->add_option("--lda-topics", bundle.lda_topics, "lda.num_topics written to config.ini");
  synth->add_option("--burn-in", bundle.burn_in_iterations, "lda.burn_in_iterations in config.ini");

  auto* null_swap = app.add_subcommand("null-swap", "Swap news between two stocks");
  std::string config_b;
  null_swap->add_option("-a,--config-a", config_path, "First stock")->required();
  null_swap->add_option("-b,--config-b", config_b, "Second stock")->required();
  overrides.attach(*null_swap);

  auto* run = app.add_subcommand("run", "End to end; several configs run in batch mode");
  std::vector<std::string> run_configs;
  std::string batch_graph;
  unsigned batch_threads = 1;
  run->add_option("-c,--config", run_configs, "Pipeline config(s)")->required();
  run->add_option("--batch-graph", batch_graph, "Combined graph file for batch mode");
  run->add_option("--workers", batch_threads, "Stocks processed in parallel in batch mode");
  run->add_flag("--no-resume", no_resume, "Ignore the corpus/topic checkpoint");
  overrides.attach(*run);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  spdlog::set_level(spdlog::level::from_str(log_level));
  spdlog::set_pattern("[%l] %v");

  try {
    RunOptions options;
    options.resume = !no_resume;

    if (ingest->parsed() || topics->parsed() || prune_cmd->parsed()) {
      const auto config = load_checked(config_path, overrides);
      const auto until = ingest->parsed() ? NewsStage::corpus
                         : topics->parsed() ? NewsStage::topics
                                            : NewsStage::pruned;
      const auto news = prepare_news(config, config.paths.output_dir, options, until);
      std::cout << "documents=" << news.corpus.size() << " tokens=" << news.corpus.total_tokens()
                << " vocabulary=" << news.corpus.vocabulary().size();
      if (until != NewsStage::corpus) std::cout << " topics=" << news.model.num_topics();
      if (until == NewsStage::pruned) std::cout << " kept=" << news.prune.kept_topics().size();
      std::cout << '\n';
    } else if (normalize->parsed() || peaks->parsed()) {
      const auto config = load_checked(config_path, overrides);
      const auto side = prepare_market(config, config.paths.output_dir);
      std::cout << "days=" << side.volume.size() << " peaks=" << side.peaks.peaks.size()
                << " windows=" << side.peaks.windows.size() << '\n';
    } else if (fit->parsed()) {
      const auto config = load(config_path, overrides);
      const auto& out = config.paths.output_dir;
      const auto news = load_news(config, out);
      const auto market = load_market(out);
      const auto r = fit_stage(config, news, market, out);
      std::cout << "lambda=" << format_double(r.fit.lambda)
                << " intercept=" << format_double(r.fit.intercept) << '\n';
    } else if (evaluate->parsed()) {
      const auto config = load(config_path, overrides);
      const auto& out = config.paths.output_dir;
      const auto news = load_news(config, out);
      const auto market = load_market(out);
      auto r = load_fit(config, news, market);
      evaluate_stage(config, news, market, r, out);
      std::cout << "selected=" << r.selection.selected.size() << '\n';
      print_report(config.study.stock, r.report);
    } else if (graph->parsed()) {
      std::vector<StockTopics> stocks;
      PipelineConfig first;
      for (std::size_t i = 0; i < graph_configs.size(); ++i) {
        const auto config = load(graph_configs[i], overrides);
        if (i == 0) first = config;
        const auto news = load_news(config, config.paths.output_dir);
        const auto market = load_market(config.paths.output_dir);
        const auto r = load_fit(config, news, market);
        const auto selection =
            compute_fve(r.fit, r.design, market.peaks, config.regression.fve_threshold);
        stocks.push_back(stock_topics(config.study.stock, config.study.company, news.model,
                                      news.corpus.vocabulary(), selection));
      }
      const auto format = graph_format.empty() ? first.graph.format : parse_graph_format(graph_format);
      const std::filesystem::path path =
          graph_output.empty()
              ? first.paths.output_dir / (std::string(artifact::kGraphStem) + "." +
                                          std::string(extension(format)))
              : std::filesystem::path(graph_output);
      const auto g = build_graph(stocks, first.graph.jsd_threshold, first.study.threads);
      export_graph(g, format, path);
      std::cout << "nodes=" << g.nodes.size() << " edges=" << g.edges.size() << " file=" << path.string()
                << '\n';
    } else if (synth->parsed()) {
      bundle.truth.noise = noise == "student_t" ? NoiseKind::student_t : NoiseKind::gaussian;
      bundle.truth.disjoint = !dirichlet_topics;
      bundle.corpus.docs_per_day_min = docs_per_day - docs_per_day / 2;
      bundle.corpus.docs_per_day_max = docs_per_day + docs_per_day / 2;
      bundle.corpus.doc_length_min = bundle.corpus.doc_length_max = doc_length;
      const auto b = make_bundle(bundle);
      write_bundle(b, synth_dir);
      std::cout << "records=" << b.news.records.size() << " days=" << b.market.dates.size()
                << " causal=" << b.truth.support.size() << " dir=" << synth_dir << '\n';
    } else if (null_swap->parsed()) {
      const auto a = load(config_path, overrides);
      const auto b = load(config_b, overrides);
      const auto result = run_null_swap(a, b, options);
      print_report(b.study.stock + " news -> " + a.study.stock + " volume", result.a_volume_b_news);
      print_report(a.study.stock + " news -> " + b.study.stock + " volume", result.b_volume_a_news);
    } else if (run->parsed()) {
      if (run_configs.size() == 1) {
        const auto config = load(run_configs.front(), overrides);
        const auto result = run_pipeline(config, options);
        std::cout << "selected=" << result.attribution.selection.selected.size()
                  << " kept=" << result.attribution.fit.topic_ids.size() << '\n';
        print_report(config.study.stock, result.attribution.report);
      } else {
        std::vector<PipelineConfig> configs;
        for (const auto& path : run_configs) configs.push_back(load(path, overrides));
        const auto entries = run_batch(configs, batch_threads, batch_graph);
        for (const auto& e : entries) {
          std::cout << e.stock << ": records=" << e.records;
          if (e.ran) {
            std::cout << " fpe=" << format_double(e.fpe) << '\n';
          } else {
            std::cout << " skipped (" << e.skipped_reason << ")\n";
          }
        }
      }
    }
  } catch (const ConfigError& e) {
    spdlog::error("{}", e.what());
    return 1;
  } catch (const StageError& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 2;
  }
  return 0;
}
