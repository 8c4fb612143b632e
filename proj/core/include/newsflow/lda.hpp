#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "newsflow/corpus.hpp"
#include "newsflow/random.hpp"

namespace newsflow {

struct LdaConfig {
  std::size_t num_topics = 100;
  /// Document-topic prior; 50 / num_topics when unset.
  std::optional<double> alpha;
  double beta = 0.01;
  std::size_t burn_in_iterations = 1000;
  std::uint64_t seed = 0;
  /// Record the corpus log-likelihood every this many sweeps (0 disables).
  std::size_t loglik_interval = 1;

  double effective_alpha() const {
    return alpha ? *alpha : 50.0 / static_cast<double>(num_topics);
  }
  /// Throws ConfigError unless K >= 1, alpha > 0, beta > 0 and at least one
  /// sweep. Pipeline configs additionally require K >= 2.
  void validate() const;
};

/// Per document, per token position, the topic that token is tagged with.
using TopicAssignments = std::vector<std::vector<std::uint32_t>>;

/// Count matrices of the collapsed sampler.
class GibbsCounts {
 public:
  GibbsCounts() = default;
  GibbsCounts(std::size_t docs, std::size_t topics, std::size_t vocab);

  /// Recomputes every count from scratch. Throws DataError when shapes or
  /// topic ids disagree with the corpus.
  static GibbsCounts from_assignments(const Corpus& corpus, const TopicAssignments& z,
                                      std::size_t topics);

  std::size_t docs() const { return docs_; }
  std::size_t topics() const { return topics_; }
  std::size_t vocab() const { return vocab_; }

  std::uint32_t doc_topic(std::size_t d, std::size_t k) const { return doc_topic_[d * topics_ + k]; }
  // Stored word-major so the K weights of one word are contiguous.
  std::uint32_t topic_word(std::size_t k, std::size_t w) const { return topic_word_[w * topics_ + k]; }
  std::uint32_t topic_total(std::size_t k) const { return topic_total_[k]; }

  void add(std::size_t d, std::size_t w, std::size_t k);
  void remove(std::size_t d, std::size_t w, std::size_t k);

  friend bool operator==(const GibbsCounts&, const GibbsCounts&) = default;

 private:
  friend class GibbsSampler;
  std::size_t docs_ = 0;
  std::size_t topics_ = 0;
  std::size_t vocab_ = 0;
  std::vector<std::uint32_t> doc_topic_;
  std::vector<std::uint32_t> topic_word_;
  std::vector<std::uint32_t> topic_total_;
};

/// Unnormalized collapsed Gibbs conditional for assigning a token of word w
/// in document d to topic k, given counts that exclude that token:
///   (n_dk + alpha) * (n_kw + beta) / (n_k + V * beta)
inline double conditional_weight(double n_dk, double n_kw, double n_k, double alpha, double beta,
                                 std::size_t vocab_size) {
  return (n_dk + alpha) * (n_kw + beta) / (n_k + static_cast<double>(vocab_size) * beta);
}

inline double conditional_weight(const GibbsCounts& excluded, std::size_t d, std::size_t w,
                                 std::size_t k, double alpha, double beta) {
  return conditional_weight(excluded.doc_topic(d, k), excluded.topic_word(k, w),
                            excluded.topic_total(k), alpha, beta, excluded.vocab());
}

/// Fitted topics. Immutable after construction and safe to share.
class TopicModel {
 public:
  TopicModel() = default;
  /// phi is num_topics x vocab_size, row-major.
  TopicModel(std::size_t num_topics, std::size_t vocab_size, std::vector<double> phi,
             TopicAssignments assignments, GibbsCounts counts,
             std::vector<double> log_likelihood_trace = {});

  std::size_t num_topics() const { return num_topics_; }
  std::size_t vocab_size() const { return vocab_size_; }
  std::span<const double> phi() const { return phi_; }
  std::span<const double> topic_distribution(std::size_t k) const {
    return std::span<const double>(phi_).subspan(k * vocab_size_, vocab_size_);
  }
  const TopicAssignments& assignments() const { return assignments_; }
  const GibbsCounts& counts() const { return counts_; }
  const std::vector<double>& log_likelihood_trace() const { return log_likelihood_trace_; }

  /// The n most probable word ids of topic k; equal probabilities go to the
  /// smaller token id.
  std::vector<std::uint32_t> top_words(std::size_t k, std::size_t n) const;

 private:
  std::size_t num_topics_ = 0;
  std::size_t vocab_size_ = 0;
  std::vector<double> phi_;
  TopicAssignments assignments_;
  GibbsCounts counts_;
  std::vector<double> log_likelihood_trace_;
};

/// phi_kw = (n_kw + beta) / (n_k + V * beta)
std::vector<double> estimate_phi(const GibbsCounts& counts, double beta);

/// Single-chain collapsed Gibbs sampler.
///
/// Initialization draws each token's topic uniformly, in document then
/// position order. Each sweep visits tokens in the same order; a new topic is
/// drawn by inverting the cumulative sum of the K conditional weights with
/// one Rng::uniform() draw. All randomness comes from one Rng seeded with
/// LdaConfig::seed, so a fit is a pure function of (corpus, config).
class GibbsSampler {
 public:
  /// Throws ConfigError on an empty corpus or invalid config.
  GibbsSampler(const Corpus& corpus, const LdaConfig& config);

  void sweep();
  std::size_t sweeps_done() const { return sweeps_; }

  const GibbsCounts& counts() const { return counts_; }
  const TopicAssignments& assignments() const { return assignments_; }
  const LdaConfig& config() const { return config_; }

  /// log p(w | z) + log p(z) with phi and theta integrated out.
  double log_likelihood() const;

  TopicModel model(std::vector<double> log_likelihood_trace = {}) const;

 private:
  const Corpus* corpus_;
  LdaConfig config_;
  double alpha_;
  Rng rng_;
  GibbsCounts counts_;
  TopicAssignments assignments_;
  std::vector<double> weights_;
  std::size_t sweeps_ = 0;
};

/// Runs config.burn_in_iterations sweeps; the final sweep's assignments tag
/// the tokens. `on_sweep` is called after every sweep.
TopicModel fit_lda(const Corpus& corpus, const LdaConfig& config,
                   const std::function<void(const GibbsSampler&)>& on_sweep = {});

/// Binary phi file: 8-byte magic "NFPHI001", uint64 K, uint64 V (little
/// endian), then K*V little-endian IEEE-754 doubles, row-major.
void save_phi(const TopicModel& model, const std::filesystem::path& path);
std::vector<double> load_phi(const std::filesystem::path& path, std::size_t& num_topics,
                             std::size_t& vocab_size);

/// Text assignments file: first line "#newsflow-assignments v1", then
/// "doc_id<TAB>space-separated topic ids" per document in corpus order.
void save_assignments(const Corpus& corpus, const TopicModel& model,
                      const std::filesystem::path& path);
TopicAssignments load_assignments(const Corpus& corpus, const std::filesystem::path& path);

/// Rebuilds a model from its persisted phi and assignments; counts are
/// recomputed from the assignments.
TopicModel load_topic_model(const Corpus& corpus, const std::filesystem::path& phi_path,
                            const std::filesystem::path& assignments_path);

}  // namespace newsflow
