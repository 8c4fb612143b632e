#include "newsflow/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "newsflow/error.hpp"
#include "newsflow/random.hpp"
#include "newsflow/tabular.hpp"

namespace newsflow {

namespace {

// Independent streams of one ground-truth seed.
enum Stream : std::uint64_t { kTruthStream = 1, kCorpusStream = 2, kVolumeStream = 3 };

std::size_t uniform_between(Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + rng.uniform_index(hi - lo + 1);
}

double draw_noise(Rng& rng, NoiseKind kind) {
  if (kind == NoiseKind::gaussian) return rng.normal();
  // t with 3 degrees of freedom: z / sqrt(chi2_3 / 3), chi2_3 = 2 * Gamma(1.5).
  constexpr double dof = 3.0;
  const double chi2 = 2.0 * rng.gamma(dof / 2.0);
  return rng.normal() / std::sqrt(chi2 / dof);
}

std::vector<int> hungarian_square_or_wide(const std::vector<double>& cost, std::size_t n,
                                          std::size_t m) {
  // Potentials method, 1-based with a virtual column 0; requires n <= m.
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost[(i0 - 1) * m + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> assignment(n, -1);
  for (std::size_t j = 1; j <= m; ++j) {
    if (p[j] != 0) assignment[p[j] - 1] = static_cast<int>(j - 1);
  }
  return assignment;
}

}  // namespace

std::string GroundTruth::word(std::size_t w) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "w%05zu", w);
  return buffer;
}

SparseDistribution GroundTruth::distribution(std::size_t k) const {
  SparseDistribution dist;
  for (std::size_t w = 0; w < vocab_size; ++w) {
    const double p = phi[k * vocab_size + w];
    if (p > 0.0) dist.emplace_back(word(w), p);
  }
  return dist;  // "w%05zu" sorts in id order
}

void GroundTruth::validate() const {
  if (num_topics < 1 || vocab_size < 1) throw ConfigError("ground truth needs topics and words");
  if (phi.size() != num_topics * vocab_size) throw ConfigError("ground truth phi has the wrong shape");
  if (weights.size() != num_topics) throw ConfigError("ground truth needs one weight per topic");
  for (std::size_t k = 0; k < num_topics; ++k) {
    double sum = 0.0;
    for (std::size_t w = 0; w < vocab_size; ++w) sum += phi[k * vocab_size + w];
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("ground truth phi row does not sum to 1");
  }
  for (const double w : weights) {
    if (!(w >= 0.0)) throw ConfigError("ground truth weights must be nonnegative");
  }
  if (!(alpha > 0.0)) throw ConfigError("ground truth alpha must be positive");
  if (!(noise_sigma >= 0.0)) throw ConfigError("noise sigma must be nonnegative");
}

GroundTruth make_ground_truth(const TruthOptions& o) {
  if (o.num_topics < 1) throw ConfigError("synthetic truth needs at least one topic");
  if (o.causal_topics > o.num_topics) throw ConfigError("more causal topics than topics");
  if (o.disjoint && o.vocab_size < o.num_topics) {
    throw ConfigError("disjoint topics need at least one word each");
  }
  if (!(o.weight_min >= 0.0 && o.weight_max >= o.weight_min)) {
    throw ConfigError("synthetic weight range is invalid");
  }
  Rng rng(derive_seed(o.seed, kTruthStream));
  GroundTruth t;
  t.num_topics = o.num_topics;
  t.vocab_size = o.vocab_size;
  t.alpha = o.alpha;
  t.intercept = o.intercept;
  t.noise_sigma = o.noise_sigma;
  t.noise = o.noise;
  t.seed = o.seed;
  t.phi.assign(o.num_topics * o.vocab_size, 0.0);
  for (std::size_t k = 0; k < o.num_topics; ++k) {
    double* row = t.phi.data() + k * o.vocab_size;
    if (o.disjoint) {
      const std::size_t lo = k * o.vocab_size / o.num_topics;
      const std::size_t hi = (k + 1) * o.vocab_size / o.num_topics;
      for (std::size_t w = lo; w < hi; ++w) row[w] = 1.0 / static_cast<double>(hi - lo);
    } else {
      const auto draw = rng.symmetric_dirichlet(o.topic_concentration, o.vocab_size);
      std::copy(draw.begin(), draw.end(), row);
    }
  }
  std::vector<int> topics(o.num_topics);
  std::iota(topics.begin(), topics.end(), 0);
  rng.shuffle(topics);
  topics.resize(o.causal_topics);
  std::sort(topics.begin(), topics.end());
  t.support = topics;
  t.weights.assign(o.num_topics, 0.0);
  for (const int k : t.support) {
    t.weights[static_cast<std::size_t>(k)] = o.weight_min + (o.weight_max - o.weight_min) * rng.uniform();
  }
  t.validate();
  return t;
}

SynthCorpus generate_corpus(const GroundTruth& truth, const CorpusOptions& o) {
  truth.validate();
  if (o.days < 1) throw ConfigError("synthetic corpus needs at least one day");
  if (o.docs_per_day_max < o.docs_per_day_min || o.doc_length_min < 1 ||
      o.doc_length_max < o.doc_length_min) {
    throw ConfigError("synthetic corpus size ranges are invalid");
  }
  Rng rng(derive_seed(truth.seed, kCorpusStream));
  const std::size_t K = truth.num_topics;
  const std::size_t V = truth.vocab_size;

  SynthCorpus out;
  out.period = {o.start, o.start.add_days(static_cast<std::int32_t>(o.days) - 1)};
  Vocabulary vocabulary;
  std::vector<std::string> words(V);
  for (std::size_t w = 0; w < V; ++w) {
    words[w] = GroundTruth::word(w);
    vocabulary.intern(words[w]);
  }
  std::vector<Document> documents;
  std::size_t serial = 0;
  for (std::size_t day = 0; day < o.days; ++day) {
    const Date date = o.start.add_days(static_cast<std::int32_t>(day));
    const std::size_t count = uniform_between(rng, o.docs_per_day_min, o.docs_per_day_max);
    for (std::size_t d = 0; d < count; ++d) {
      const auto theta = rng.symmetric_dirichlet(truth.alpha, K);
      const std::size_t length = uniform_between(rng, o.doc_length_min, o.doc_length_max);
      Document doc;
      doc.date = date;
      std::vector<std::uint32_t> topics;
      std::string body;
      for (std::size_t i = 0; i < length; ++i) {
        const auto k = K == 1 ? 0 : rng.categorical(theta);
        const auto w = rng.categorical(std::span<const double>(truth.phi).subspan(k * V, V));
        topics.push_back(static_cast<std::uint32_t>(k));
        doc.tokens.push_back(static_cast<std::uint32_t>(w));
        if (!body.empty()) body += ' ';
        body += words[w];
      }
      char id[64];
      std::snprintf(id, sizeof id, "%s-%07zu", o.id_prefix.c_str(), serial++);
      doc.id = id;
      out.records.push_back({doc.id, date, o.term, std::move(body)});
      out.true_assignments.push_back(std::move(topics));
      documents.push_back(std::move(doc));
    }
  }
  out.corpus = Corpus(o.term, std::move(vocabulary), std::move(documents));
  return out;
}

TopicSeries true_series(const GroundTruth& truth, const SynthCorpus& synth) {
  return news_volume(synth.true_assignments, truth.num_topics, synth.corpus, synth.period);
}

MarketSeries generate_volume(const GroundTruth& truth, const TopicSeries& series) {
  truth.validate();
  if (series.num_topics() != truth.num_topics) {
    throw ConfigError("topic series does not match the ground truth");
  }
  Rng rng(derive_seed(truth.seed, kVolumeStream));
  MarketSeries market;
  for (std::size_t t = 0; t < series.num_days(); ++t) {
    double y = truth.intercept;
    for (std::size_t k = 0; k < truth.num_topics; ++k) {
      y += truth.weights[k] * static_cast<double>(series.at(k, t));
    }
    if (truth.noise_sigma > 0.0) y += truth.noise_sigma * draw_noise(rng, truth.noise);
    market.dates.push_back(series.dates()[t]);
    market.volume.push_back(static_cast<std::int64_t>(std::llround(std::max(0.0, y))));
  }
  return market;
}

std::vector<int> hungarian(const std::vector<double>& cost, std::size_t rows, std::size_t cols) {
  if (cost.size() != rows * cols) throw ConfigError("assignment cost matrix has the wrong shape");
  if (rows == 0 || cols == 0) return std::vector<int>(rows, -1);
  if (rows <= cols) return hungarian_square_or_wide(cost, rows, cols);
  std::vector<double> transposed(cost.size());
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) transposed[j * rows + i] = cost[i * cols + j];
  }
  const auto by_col = hungarian_square_or_wide(transposed, cols, rows);
  std::vector<int> assignment(rows, -1);
  for (std::size_t j = 0; j < cols; ++j) {
    if (by_col[j] >= 0) assignment[static_cast<std::size_t>(by_col[j])] = static_cast<int>(j);
  }
  return assignment;
}

std::vector<int> match_topics(const std::vector<SparseDistribution>& fitted,
                              const GroundTruth& truth) {
  std::vector<SparseDistribution> real;
  for (std::size_t k = 0; k < truth.num_topics; ++k) real.push_back(truth.distribution(k));
  std::vector<double> cost(fitted.size() * real.size());
  for (std::size_t i = 0; i < fitted.size(); ++i) {
    for (std::size_t j = 0; j < real.size(); ++j) {
      cost[i * real.size() + j] = -(1.0 - jsd(fitted[i], real[j]));
    }
  }
  return hungarian(cost, fitted.size(), real.size());
}

SparseDistribution model_distribution(const TopicModel& model, const Vocabulary& vocabulary,
                                      std::size_t k) {
  SparseDistribution dist;
  const auto row = model.topic_distribution(k);
  for (std::size_t w = 0; w < row.size(); ++w) {
    if (row[w] > 0.0) dist.emplace_back(vocabulary.token(static_cast<std::uint32_t>(w)), row[w]);
  }
  std::sort(dist.begin(), dist.end());
  return dist;
}

Bundle make_bundle(const BundleOptions& options) {
  Bundle b;
  b.truth = make_ground_truth(options.truth);
  b.news = generate_corpus(b.truth, options.corpus);
  b.market = generate_volume(b.truth, true_series(b.truth, b.news));

  auto& c = b.config;
  c.paths.news = "news.jsonl";
  c.paths.market = "market.csv";
  c.paths.output_dir = "out";
  c.study.stock = options.corpus.term;
  c.study.company = options.corpus.term;
  c.study.term = options.corpus.term;
  c.study.period = b.news.period;
  c.study.seed = options.truth.seed;
  c.study.min_records = options.min_records;
  c.lda.num_topics = options.lda_topics;
  c.lda.burn_in_iterations = options.burn_in_iterations;
  c.prune.min_active_days = options.min_active_days;
  return b;
}

void write_news_jsonl(const std::vector<NewsRecord>& records, const std::filesystem::path& path) {
  auto out = open_output(path);
  for (const auto& r : records) {
    nlohmann::ordered_json j;
    j["id"] = r.id;
    j["timestamp"] = r.timestamp.iso() + "T12:00:00Z";
    j["headline"] = r.headline;
    j["body"] = r.body;
    out << j.dump() << '\n';
  }
  if (!out) throw Error("write failed: " + path.string());
}

void write_truth_json(const GroundTruth& t, const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["num_topics"] = t.num_topics;
  j["vocab_size"] = t.vocab_size;
  j["alpha"] = t.alpha;
  j["weights"] = t.weights;
  j["support"] = t.support;
  j["intercept"] = t.intercept;
  j["noise_sigma"] = t.noise_sigma;
  j["noise"] = t.noise == NoiseKind::gaussian ? "gaussian" : "student_t";
  j["seed"] = t.seed;
  j["phi"] = t.phi;
  auto out = open_output(path);
  out << j.dump() << '\n';
  if (!out) throw Error("write failed: " + path.string());
}

GroundTruth read_truth_json(const std::filesystem::path& path) {
  auto in = open_input(path);
  GroundTruth t;
  try {
    const auto j = nlohmann::json::parse(in);
    t.num_topics = j.at("num_topics").get<std::size_t>();
    t.vocab_size = j.at("vocab_size").get<std::size_t>();
    t.alpha = j.at("alpha").get<double>();
    t.weights = j.at("weights").get<std::vector<double>>();
    t.support = j.at("support").get<std::vector<int>>();
    t.intercept = j.at("intercept").get<double>();
    t.noise_sigma = j.at("noise_sigma").get<double>();
    t.noise = j.at("noise").get<std::string>() == "student_t" ? NoiseKind::student_t
                                                               : NoiseKind::gaussian;
    t.seed = j.at("seed").get<std::uint64_t>();
    t.phi = j.at("phi").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  t.validate();
  return t;
}

void write_bundle(const Bundle& bundle, const std::filesystem::path& dir) {
  write_news_jsonl(bundle.news.records, dir / "news.jsonl");
  write_market_csv(bundle.market, dir / "market.csv");
  write_truth_json(bundle.truth, dir / "truth.json");
  save_config(bundle.config, dir / "config.ini");
}

}  // namespace newsflow
