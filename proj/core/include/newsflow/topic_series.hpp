#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "newsflow/corpus.hpp"
#include "newsflow/date.hpp"
#include "newsflow/lda.hpp"

namespace newsflow {

/// Daily news volume per topic: I[k][t] is the number of tokens dated day t
/// that are tagged with topic k. The date axis holds every calendar day of
/// the period.
class TopicSeries {
 public:
  TopicSeries() = default;
  TopicSeries(std::vector<int> topic_ids, std::vector<Date> dates,
              std::vector<std::int64_t> counts);

  std::size_t num_topics() const { return topic_ids_.size(); }
  std::size_t num_days() const { return dates_.size(); }
  const std::vector<int>& topic_ids() const { return topic_ids_; }
  const std::vector<Date>& dates() const { return dates_; }

  /// Count for topic row k on day t. Rows are stored contiguously.
  std::int64_t at(std::size_t k, std::size_t t) const { return counts_[k * dates_.size() + t]; }
  std::span<const std::int64_t> row(std::size_t k) const {
    return std::span<const std::int64_t>(counts_).subspan(k * dates_.size(), dates_.size());
  }
  /// Position of `d` on the date axis, or -1.
  std::ptrdiff_t index_of(Date d) const;
  /// Number of days with a nonzero count for topic row k.
  std::size_t active_days(std::size_t k) const;
  std::int64_t day_total(std::size_t t) const;

 private:
  std::vector<int> topic_ids_;
  std::vector<Date> dates_;
  std::vector<std::int64_t> counts_;
};

/// Counts the token positions of each day's documents per assigned topic.
/// Throws DataError when a document lies outside `period`.
TopicSeries news_volume(const TopicAssignments& assignments, std::size_t num_topics,
                        const Corpus& corpus, const DateRange& period);
TopicSeries news_volume(const TopicModel& model, const Corpus& corpus, const DateRange& period);

enum class TopicStatus { kept, boilerplate, rare, market };

std::string_view to_string(TopicStatus status);
TopicStatus parse_topic_status(std::string_view text);

struct PruneRules {
  std::size_t top_words = 6;
  std::size_t min_active_days = 80;
};

struct PruneReport {
  std::vector<TopicStatus> status;
  std::vector<std::vector<std::string>> top_words;

  std::vector<int> kept_topics() const;
};

/// Applies, in order, with the first match winning:
///   boilerplate  every one of the top words is in `boilerplate`
///   rare         fewer than min_active_days days with nonzero volume
///   market       any of the top words is in `market`
PruneReport prune(const TopicModel& model, const Vocabulary& vocabulary,
                  const TopicSeries& series, const WordSet& boilerplate,
                  const WordSet& market, const PruneRules& rules = {});

/// CSV with a `date` column and one column per topic id.
void write_topic_series_csv(const TopicSeries& series, const std::filesystem::path& path);
TopicSeries read_topic_series_csv(const std::filesystem::path& path);

/// CSV topic_id,status,top_words with top words joined by '|'.
void write_prune_report_csv(const PruneReport& report, const std::filesystem::path& path);
PruneReport read_prune_report_csv(const std::filesystem::path& path);

}  // namespace newsflow
