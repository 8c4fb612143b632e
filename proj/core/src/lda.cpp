#include "newsflow/lda.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>

#include <spdlog/spdlog.h>

#include "newsflow/error.hpp"
#include "newsflow/tabular.hpp"

namespace newsflow {

namespace {

constexpr char kPhiMagic[8] = {'N', 'F', 'P', 'H', 'I', '0', '0', '1'};
constexpr const char* kAssignmentsHeader = "#newsflow-assignments v1";

static_assert(std::endian::native == std::endian::little,
              "phi persistence assumes a little-endian host");

}  // namespace

void LdaConfig::validate() const {
  if (num_topics < 1) throw ConfigError("lda: num_topics must be positive");
  if (alpha && !(*alpha > 0.0)) throw ConfigError("lda: alpha must be positive");
  if (!(beta > 0.0)) throw ConfigError("lda: beta must be positive");
  if (burn_in_iterations == 0) throw ConfigError("lda: burn_in_iterations must be positive");
}

GibbsCounts::GibbsCounts(std::size_t docs, std::size_t topics, std::size_t vocab)
    : docs_(docs),
      topics_(topics),
      vocab_(vocab),
      doc_topic_(docs * topics, 0),
      topic_word_(topics * vocab, 0),
      topic_total_(topics, 0) {}

GibbsCounts GibbsCounts::from_assignments(const Corpus& corpus, const TopicAssignments& z,
                                          std::size_t topics) {
  if (z.size() != corpus.size()) {
    throw DataError("assignments cover " + std::to_string(z.size()) + " documents, corpus has " +
                    std::to_string(corpus.size()));
  }
  GibbsCounts counts(corpus.size(), topics, corpus.vocabulary().size());
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    const auto& tokens = corpus.document(d).tokens;
    if (z[d].size() != tokens.size()) {
      throw DataError("assignment length mismatch for document '" + corpus.document(d).id + "'");
    }
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (z[d][i] >= topics) throw DataError("topic id out of range in assignments");
      counts.add(d, tokens[i], z[d][i]);
    }
  }
  return counts;
}

void GibbsCounts::add(std::size_t d, std::size_t w, std::size_t k) {
  ++doc_topic_[d * topics_ + k];
  ++topic_word_[w * topics_ + k];
  ++topic_total_[k];
}

void GibbsCounts::remove(std::size_t d, std::size_t w, std::size_t k) {
  --doc_topic_[d * topics_ + k];
  --topic_word_[w * topics_ + k];
  --topic_total_[k];
}

TopicModel::TopicModel(std::size_t num_topics, std::size_t vocab_size, std::vector<double> phi,
                       TopicAssignments assignments, GibbsCounts counts,
                       std::vector<double> log_likelihood_trace)
    : num_topics_(num_topics),
      vocab_size_(vocab_size),
      phi_(std::move(phi)),
      assignments_(std::move(assignments)),
      counts_(std::move(counts)),
      log_likelihood_trace_(std::move(log_likelihood_trace)) {
  if (phi_.size() != num_topics_ * vocab_size_) {
    throw DataError("phi has " + std::to_string(phi_.size()) + " entries, expected " +
                    std::to_string(num_topics_ * vocab_size_));
  }
}

std::vector<std::uint32_t> TopicModel::top_words(std::size_t k, std::size_t n) const {
  const auto row = topic_distribution(k);
  std::vector<std::uint32_t> ids(vocab_size_);
  std::iota(ids.begin(), ids.end(), 0u);
  n = std::min(n, ids.size());
  std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n), ids.end(),
                    [&](std::uint32_t a, std::uint32_t b) {
                      return row[a] > row[b] || (row[a] == row[b] && a < b);
                    });
  ids.resize(n);
  return ids;
}

std::vector<double> estimate_phi(const GibbsCounts& counts, double beta) {
  const std::size_t K = counts.topics();
  const std::size_t V = counts.vocab();
  std::vector<double> phi(K * V);
  for (std::size_t k = 0; k < K; ++k) {
    const double denominator = counts.topic_total(k) + static_cast<double>(V) * beta;
    for (std::size_t w = 0; w < V; ++w) {
      phi[k * V + w] = (counts.topic_word(k, w) + beta) / denominator;
    }
  }
  return phi;
}

GibbsSampler::GibbsSampler(const Corpus& corpus, const LdaConfig& config)
    : corpus_(&corpus),
      config_(config),
      alpha_(config.effective_alpha()),
      rng_(config.seed),
      counts_(corpus.size(), config.num_topics, corpus.vocabulary().size()),
      weights_(config.num_topics) {
  config_.validate();
  if (corpus.empty()) throw ConfigError("lda: cannot fit an empty corpus");
  assignments_.resize(corpus.size());
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    const auto& tokens = corpus.document(d).tokens;
    assignments_[d].resize(tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      const auto k = static_cast<std::uint32_t>(rng_.uniform_index(config_.num_topics));
      assignments_[d][i] = k;
      counts_.add(d, tokens[i], k);
    }
  }
}

void GibbsSampler::sweep() {
  const std::size_t K = config_.num_topics;
  const double beta = config_.beta;
  const double vbeta = static_cast<double>(counts_.vocab_) * beta;
  for (std::size_t d = 0; d < corpus_->size(); ++d) {
    const auto& tokens = corpus_->document(d).tokens;
    auto& z = assignments_[d];
    const std::uint32_t* doc_topic = counts_.doc_topic_.data() + d * K;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      const std::size_t w = tokens[i];
      counts_.remove(d, w, z[i]);
      const std::uint32_t* word_topic = counts_.topic_word_.data() + w * K;
      double total = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        total += (doc_topic[k] + alpha_) * (word_topic[k] + beta) /
                 (counts_.topic_total_[k] + vbeta);
        weights_[k] = total;
      }
      const double u = rng_.uniform() * total;
      std::size_t chosen = 0;
      while (chosen + 1 < K && !(u < weights_[chosen])) ++chosen;
      z[i] = static_cast<std::uint32_t>(chosen);
      counts_.add(d, w, chosen);
    }
  }
  ++sweeps_;
}

double GibbsSampler::log_likelihood() const {
  const std::size_t K = config_.num_topics;
  const std::size_t V = counts_.vocab();
  const double beta = config_.beta;
  const double vbeta = static_cast<double>(V) * beta;
  double words = static_cast<double>(K) * (std::lgamma(vbeta) - static_cast<double>(V) * std::lgamma(beta));
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t w = 0; w < V; ++w) {
      const auto n = counts_.topic_word(k, w);
      if (n > 0) words += std::lgamma(n + beta) - std::lgamma(beta);
    }
    words -= std::lgamma(counts_.topic_total(k) + vbeta) - std::lgamma(vbeta);
  }
  const double kalpha = static_cast<double>(K) * alpha_;
  double topics = 0.0;
  for (std::size_t d = 0; d < counts_.docs(); ++d) {
    for (std::size_t k = 0; k < K; ++k) {
      const auto n = counts_.doc_topic(d, k);
      if (n > 0) topics += std::lgamma(n + alpha_) - std::lgamma(alpha_);
    }
    topics += std::lgamma(kalpha) - std::lgamma(assignments_[d].size() + kalpha);
  }
  return words + topics;
}

TopicModel GibbsSampler::model(std::vector<double> log_likelihood_trace) const {
  return TopicModel(config_.num_topics, counts_.vocab(), estimate_phi(counts_, config_.beta),
                    assignments_, counts_, std::move(log_likelihood_trace));
}

TopicModel fit_lda(const Corpus& corpus, const LdaConfig& config,
                   const std::function<void(const GibbsSampler&)>& on_sweep) {
  GibbsSampler sampler(corpus, config);
  std::vector<double> trace;
  for (std::size_t s = 0; s < config.burn_in_iterations; ++s) {
    sampler.sweep();
    if (config.loglik_interval > 0 && (s + 1) % config.loglik_interval == 0) {
      trace.push_back(sampler.log_likelihood());
      spdlog::debug("lda sweep {}/{}: log-likelihood {:.6g}", s + 1, config.burn_in_iterations,
                    trace.back());
    }
    if (on_sweep) on_sweep(sampler);
  }
  return sampler.model(std::move(trace));
}

void save_phi(const TopicModel& model, const std::filesystem::path& path) {
  auto out = open_output(path, std::ios::binary);
  const std::uint64_t header[2] = {model.num_topics(), model.vocab_size()};
  out.write(kPhiMagic, sizeof kPhiMagic);
  out.write(reinterpret_cast<const char*>(header), sizeof header);
  const auto phi = model.phi();
  out.write(reinterpret_cast<const char*>(phi.data()),
            static_cast<std::streamsize>(phi.size() * sizeof(double)));
  if (!out) throw Error("write failed: " + path.string());
}

std::vector<double> load_phi(const std::filesystem::path& path, std::size_t& num_topics,
                             std::size_t& vocab_size) {
  auto in = open_input(path, std::ios::binary);
  char magic[8];
  std::uint64_t header[2];
  in.read(magic, sizeof magic);
  in.read(reinterpret_cast<char*>(header), sizeof header);
  if (!in || std::memcmp(magic, kPhiMagic, sizeof magic) != 0) {
    throw DataError(path.string() + ": not a newsflow phi file");
  }
  num_topics = header[0];
  vocab_size = header[1];
  std::vector<double> phi(num_topics * vocab_size);
  in.read(reinterpret_cast<char*>(phi.data()),
          static_cast<std::streamsize>(phi.size() * sizeof(double)));
  if (!in || in.peek() != std::char_traits<char>::eof()) {
    throw DataError(path.string() + ": truncated or oversized phi file");
  }
  return phi;
}

void save_assignments(const Corpus& corpus, const TopicModel& model,
                      const std::filesystem::path& path) {
  auto out = open_output(path);
  out << kAssignmentsHeader << '\n';
  const auto& z = model.assignments();
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    out << corpus.document(d).id << '\t';
    for (std::size_t i = 0; i < z[d].size(); ++i) {
      if (i > 0) out << ' ';
      out << z[d][i];
    }
    out << '\n';
  }
  if (!out) throw Error("write failed: " + path.string());
}

TopicAssignments load_assignments(const Corpus& corpus, const std::filesystem::path& path) {
  auto in = open_input(path);
  std::string line;
  if (!std::getline(in, line) || line != kAssignmentsHeader) {
    throw DataError(path.string() + ": missing assignments header");
  }
  TopicAssignments z;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw DataError(path.string() + ": malformed line");
    const std::size_t d = z.size();
    if (d >= corpus.size() || corpus.document(d).id != std::string_view(line).substr(0, tab)) {
      throw DataError(path.string() + ": document order does not match the corpus");
    }
    auto& topics = z.emplace_back();
    for (const auto id : split(std::string_view(line).substr(tab + 1), ' ')) {
      if (!id.empty()) topics.push_back(static_cast<std::uint32_t>(parse_integer(id)));
    }
  }
  return z;
}

TopicModel load_topic_model(const Corpus& corpus, const std::filesystem::path& phi_path,
                            const std::filesystem::path& assignments_path) {
  std::size_t K = 0;
  std::size_t V = 0;
  auto phi = load_phi(phi_path, K, V);
  if (V != corpus.vocabulary().size()) {
    throw DataError("phi vocabulary size " + std::to_string(V) + " does not match corpus (" +
                    std::to_string(corpus.vocabulary().size()) + ")");
  }
  auto z = load_assignments(corpus, assignments_path);
  auto counts = GibbsCounts::from_assignments(corpus, z, K);
  return TopicModel(K, V, std::move(phi), std::move(z), std::move(counts));
}

}  // namespace newsflow
