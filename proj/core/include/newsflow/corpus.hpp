#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "newsflow/date.hpp"

namespace newsflow {

struct NewsRecord {
  std::string id;
  Date timestamp;
  std::string headline;
  std::string body;
};

/// Field names of the line-delimited JSON news format.
struct RecordSchema {
  std::string id_field = "id";
  std::string timestamp_field = "timestamp";
  std::string headline_field = "headline";
  std::string body_field = "body";
  /// Offset of the zone in which timestamps are truncated to dates.
  std::chrono::minutes utc_offset{0};
  /// Fail on the first malformed line instead of skipping it.
  bool strict = false;
};

struct IngestResult {
  std::vector<NewsRecord> records;
  std::size_t skipped = 0;
};

/// One JSON object per line. Lines that do not decode, lack a field, carry a
/// bad timestamp or repeat an earlier id are skipped with a warning (or throw
/// DataError in strict mode). Blank lines are ignored.
IngestResult ingest(std::istream& in, const RecordSchema& schema);
/// Throws DataError when the file cannot be opened.
IngestResult ingest_file(const std::filesystem::path& path, const RecordSchema& schema);

/// Records whose headline or body contains `term`, case-insensitively, with
/// alphanumeric characters on neither side of the match. Throws ConfigError
/// on an empty term.
std::vector<NewsRecord> select_by_term(std::span<const NewsRecord> records,
                                       std::string_view term);

std::vector<NewsRecord> select_in_period(std::span<const NewsRecord> records,
                                         const DateRange& period);

using WordSet = std::unordered_set<std::string>;

/// One token per line; '#' starts a comment; blank lines ignored; tokens
/// lowercased.
WordSet parse_word_list(std::istream& in);
WordSet parse_word_list(std::string_view text);
WordSet load_word_list(const std::filesystem::path& path);

/// Contents of the word lists shipped in config/.
std::string_view default_stopwords_text();
std::string_view default_boilerplate_text();
std::string_view default_market_words_text();

/// Lowercases and splits on non-alphanumeric characters. A '.' or ',' with a
/// digit on both sides stays inside the token ("1.5", "1,000"). Bytes >= 0x80
/// count as alphanumeric so UTF-8 words stay whole. Stopwords are removed.
std::vector<std::string> tokenize_text(std::string_view text, const WordSet& stopwords);

class Vocabulary {
 public:
  std::uint32_t intern(std::string_view token);
  std::optional<std::uint32_t> find(std::string_view token) const;
  const std::string& token(std::uint32_t id) const { return tokens_.at(id); }
  std::size_t size() const { return tokens_.size(); }
  std::span<const std::string> tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::uint32_t> ids_;
};

struct Document {
  std::string id;
  Date date;
  std::vector<std::uint32_t> tokens;
};

/// Date-indexed, tokenized documents. Construction validates that every
/// token id is inside the vocabulary and that no document is empty.
class Corpus {
 public:
  Corpus() = default;
  Corpus(std::string query_term, Vocabulary vocabulary, std::vector<Document> documents);

  const std::string& query_term() const { return query_term_; }
  const Vocabulary& vocabulary() const { return vocabulary_; }
  std::span<const Document> documents() const { return documents_; }
  const Document& document(std::size_t index) const { return documents_.at(index); }
  std::size_t size() const { return documents_.size(); }
  bool empty() const { return documents_.empty(); }

  /// Date -> positions of the documents dated that day.
  const std::map<Date, std::vector<std::size_t>>& day_index() const { return day_index_; }
  std::size_t total_tokens() const { return total_tokens_; }

 private:
  std::string query_term_;
  Vocabulary vocabulary_;
  std::vector<Document> documents_;
  std::map<Date, std::vector<std::size_t>> day_index_;
  std::size_t total_tokens_ = 0;
};

/// Headline and body are tokenized as one stream. Documents that end up
/// empty are dropped. Token ids follow first occurrence in record order for
/// any `threads` value.
Corpus tokenize(std::span<const NewsRecord> records, const WordSet& stopwords,
                std::string query_term = {}, unsigned threads = 1);

/// Vocabulary file: "token_id<TAB>token". Document file:
/// "doc_id<TAB>YYYY-MM-DD<TAB>space-separated token ids".
void save_corpus(const Corpus& corpus, const std::filesystem::path& vocabulary_path,
                 const std::filesystem::path& documents_path);
Corpus load_corpus(const std::filesystem::path& vocabulary_path,
                   const std::filesystem::path& documents_path,
                   std::string query_term = {});

}  // namespace newsflow
