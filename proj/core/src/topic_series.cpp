#include "newsflow/topic_series.hpp"

#include <algorithm>

#include "newsflow/error.hpp"
#include "newsflow/tabular.hpp"

namespace newsflow {

TopicSeries::TopicSeries(std::vector<int> topic_ids, std::vector<Date> dates,
                         std::vector<std::int64_t> counts)
    : topic_ids_(std::move(topic_ids)), dates_(std::move(dates)), counts_(std::move(counts)) {
  if (counts_.size() != topic_ids_.size() * dates_.size()) {
    throw DataError("topic series shape mismatch");
  }
  if (!std::is_sorted(dates_.begin(), dates_.end()) ||
      std::adjacent_find(dates_.begin(), dates_.end()) != dates_.end()) {
    throw DataError("topic series dates must be strictly increasing");
  }
  if (std::any_of(counts_.begin(), counts_.end(), [](std::int64_t v) { return v < 0; })) {
    throw DataError("topic series counts must be nonnegative");
  }
}

std::ptrdiff_t TopicSeries::index_of(Date d) const {
  const auto it = std::lower_bound(dates_.begin(), dates_.end(), d);
  if (it == dates_.end() || *it != d) return -1;
  return it - dates_.begin();
}

std::size_t TopicSeries::active_days(std::size_t k) const {
  const auto r = row(k);
  return static_cast<std::size_t>(std::count_if(r.begin(), r.end(), [](auto v) { return v > 0; }));
}

std::int64_t TopicSeries::day_total(std::size_t t) const {
  std::int64_t total = 0;
  for (std::size_t k = 0; k < num_topics(); ++k) total += at(k, t);
  return total;
}

TopicSeries news_volume(const TopicAssignments& assignments, std::size_t num_topics,
                        const Corpus& corpus, const DateRange& period) {
  if (period.empty()) throw ConfigError("news_volume: empty period");
  if (assignments.size() != corpus.size()) {
    throw DataError("news_volume: assignments do not match the corpus");
  }
  const auto days = static_cast<std::size_t>(period.day_count());
  std::vector<Date> dates(days);
  for (std::size_t t = 0; t < days; ++t) {
    dates[t] = period.first.add_days(static_cast<std::int32_t>(t));
  }
  std::vector<std::int64_t> counts(num_topics * days, 0);
  for (const auto& [date, docs] : corpus.day_index()) {
    if (!period.contains(date)) {
      throw DataError("document dated " + date.iso() + " lies outside the study period " +
                      period.first.iso() + ".." + period.last.iso());
    }
    const auto t = static_cast<std::size_t>(date.days_since_epoch() -
                                            period.first.days_since_epoch());
    for (const auto d : docs) {
      for (const auto k : assignments[d]) {
        if (k >= num_topics) throw DataError("news_volume: topic id out of range");
        ++counts[k * days + t];
      }
    }
  }
  std::vector<int> ids(num_topics);
  for (std::size_t k = 0; k < num_topics; ++k) ids[k] = static_cast<int>(k);
  return TopicSeries(std::move(ids), std::move(dates), std::move(counts));
}

TopicSeries news_volume(const TopicModel& model, const Corpus& corpus, const DateRange& period) {
  return news_volume(model.assignments(), model.num_topics(), corpus, period);
}

std::string_view to_string(TopicStatus status) {
  switch (status) {
    case TopicStatus::kept: return "kept";
    case TopicStatus::boilerplate: return "boilerplate";
    case TopicStatus::rare: return "rare";
    case TopicStatus::market: return "market";
  }
  return "unknown";
}

TopicStatus parse_topic_status(std::string_view text) {
  for (const auto s : {TopicStatus::kept, TopicStatus::boilerplate, TopicStatus::rare,
                       TopicStatus::market}) {
    if (to_string(s) == text) return s;
  }
  throw DataError("unknown topic status '" + std::string(text) + "'");
}

std::vector<int> PruneReport::kept_topics() const {
  std::vector<int> kept;
  for (std::size_t k = 0; k < status.size(); ++k) {
    if (status[k] == TopicStatus::kept) kept.push_back(static_cast<int>(k));
  }
  return kept;
}

PruneReport prune(const TopicModel& model, const Vocabulary& vocabulary,
                  const TopicSeries& series, const WordSet& boilerplate,
                  const WordSet& market, const PruneRules& rules) {
  if (rules.min_active_days < 1) throw ConfigError("prune: min_active_days must be at least 1");
  if (series.num_topics() != model.num_topics()) {
    throw DataError("prune: series and model disagree on the number of topics");
  }
  PruneReport report;
  report.status.resize(model.num_topics(), TopicStatus::kept);
  report.top_words.resize(model.num_topics());
  for (std::size_t k = 0; k < model.num_topics(); ++k) {
    auto& words = report.top_words[k];
    for (const auto id : model.top_words(k, rules.top_words)) {
      words.push_back(vocabulary.token(id));
    }
    const auto in = [&](const WordSet& set) {
      return [&set](const std::string& w) { return set.contains(w); };
    };
    if (!words.empty() && std::all_of(words.begin(), words.end(), in(boilerplate))) {
      report.status[k] = TopicStatus::boilerplate;
    } else if (series.active_days(k) < rules.min_active_days) {
      report.status[k] = TopicStatus::rare;
    } else if (std::any_of(words.begin(), words.end(), in(market))) {
      report.status[k] = TopicStatus::market;
    }
  }
  return report;
}

void write_topic_series_csv(const TopicSeries& series, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "date";
  for (const int id : series.topic_ids()) out << ",topic_" << id;
  out << '\n';
  for (std::size_t t = 0; t < series.num_days(); ++t) {
    out << series.dates()[t].iso();
    for (std::size_t k = 0; k < series.num_topics(); ++k) out << ',' << series.at(k, t);
    out << '\n';
  }
  if (!out) throw Error("write failed: " + path.string());
}

TopicSeries read_topic_series_csv(const std::filesystem::path& path) {
  const auto table = read_csv(path);
  if (table.header.empty() || table.header[0] != "date") {
    throw DataError(path.string() + ": first column must be 'date'");
  }
  std::vector<int> ids;
  for (std::size_t c = 1; c < table.header.size(); ++c) {
    const std::string_view name = table.header[c];
    if (!name.starts_with("topic_")) throw DataError(path.string() + ": bad column " + table.header[c]);
    ids.push_back(static_cast<int>(parse_integer(name.substr(6))));
  }
  const std::size_t days = table.rows.size();
  std::vector<Date> dates(days);
  std::vector<std::int64_t> counts(ids.size() * days);
  for (std::size_t t = 0; t < days; ++t) {
    dates[t] = parse_date(table.rows[t][0]);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      counts[k * days + t] = parse_integer(table.rows[t][k + 1]);
    }
  }
  return TopicSeries(std::move(ids), std::move(dates), std::move(counts));
}

void write_prune_report_csv(const PruneReport& report, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "topic_id,status,top_words\n";
  for (std::size_t k = 0; k < report.status.size(); ++k) {
    out << k << ',' << to_string(report.status[k]) << ',';
    for (std::size_t i = 0; i < report.top_words[k].size(); ++i) {
      if (i > 0) out << '|';
      out << report.top_words[k][i];
    }
    out << '\n';
  }
  if (!out) throw Error("write failed: " + path.string());
}

PruneReport read_prune_report_csv(const std::filesystem::path& path) {
  const auto table = read_csv(path);
  const auto id_col = table.column("topic_id");
  const auto status_col = table.column("status");
  const auto words_col = table.column("top_words");
  PruneReport report;
  report.status.resize(table.rows.size());
  report.top_words.resize(table.rows.size());
  for (const auto& row : table.rows) {
    const auto k = static_cast<std::size_t>(parse_integer(row[id_col]));
    if (k >= table.rows.size()) throw DataError(path.string() + ": topic id out of range");
    report.status[k] = parse_topic_status(row[status_col]);
    for (const auto w : split(row[words_col], '|')) {
      if (!w.empty()) report.top_words[k].emplace_back(w);
    }
  }
  return report;
}

}  // namespace newsflow
