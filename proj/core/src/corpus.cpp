#include "newsflow/corpus.hpp"

#include <istream>
#include <sstream>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "newsflow/error.hpp"
#include "newsflow/parallel.hpp"
#include "newsflow/tabular.hpp"

namespace newsflow {

namespace {

bool is_word_byte(char c) {
  const auto u = static_cast<unsigned char>(c);
  return (u >= '0' && u <= '9') || (u >= 'a' && u <= 'z') || (u >= 'A' && u <= 'Z') || u >= 0x80;
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

std::optional<std::string> string_field(const nlohmann::json& object, const std::string& name) {
  const auto it = object.find(name);
  if (it == object.end() || it->is_null()) return std::nullopt;
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer() || it->is_number_unsigned()) return it->dump();
  throw DataError("field '" + name + "' is not a string");
}

bool contains_term(std::string_view haystack_lower, std::string_view term_lower) {
  std::size_t pos = haystack_lower.find(term_lower);
  while (pos != std::string_view::npos) {
    const bool left_ok = pos == 0 || !is_word_byte(haystack_lower[pos - 1]);
    const std::size_t end = pos + term_lower.size();
    const bool right_ok = end >= haystack_lower.size() || !is_word_byte(haystack_lower[end]);
    if (left_ok && right_ok) return true;
    pos = haystack_lower.find(term_lower, pos + 1);
  }
  return false;
}

}  // namespace

IngestResult ingest(std::istream& in, const RecordSchema& schema) {
  IngestResult result;
  std::unordered_set<std::string> seen_ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const auto object = nlohmann::json::parse(line);
      if (!object.is_object()) throw DataError("line is not a JSON object");
      auto id = string_field(object, schema.id_field);
      auto timestamp = string_field(object, schema.timestamp_field);
      auto headline = string_field(object, schema.headline_field);
      auto body = string_field(object, schema.body_field);
      if (!id || id->empty()) throw DataError("missing '" + schema.id_field + "'");
      if (!timestamp) throw DataError("missing '" + schema.timestamp_field + "'");
      if (!headline && !body) {
        throw DataError("missing both '" + schema.headline_field + "' and '" +
                        schema.body_field + "'");
      }
      if (!seen_ids.insert(*id).second) throw DataError("duplicate id '" + *id + "'");
      result.records.push_back(NewsRecord{std::move(*id),
                                          parse_timestamp(*timestamp, schema.utc_offset),
                                          headline.value_or(""), body.value_or("")});
    } catch (const std::exception& e) {
      const std::string message = "news line " + std::to_string(line_no) + ": " + e.what();
      if (schema.strict) throw DataError(message);
      spdlog::warn("skipping {}", message);
      ++result.skipped;
    }
  }
  if (in.bad()) throw DataError("read error while ingesting news records");
  return result;
}

IngestResult ingest_file(const std::filesystem::path& path, const RecordSchema& schema) {
  std::ifstream in = open_input(path);
  IngestResult result = ingest(in, schema);
  if (result.skipped > 0) {
    spdlog::warn("{}: skipped {} malformed line(s)", path.string(), result.skipped);
  }
  return result;
}

std::vector<NewsRecord> select_by_term(std::span<const NewsRecord> records,
                                       std::string_view term) {
  const std::string needle = to_lower_ascii(trim(term));
  if (needle.empty()) throw ConfigError("selection term must not be empty");
  std::vector<NewsRecord> selected;
  for (const auto& record : records) {
    if (contains_term(to_lower_ascii(record.headline), needle) ||
        contains_term(to_lower_ascii(record.body), needle)) {
      selected.push_back(record);
    }
  }
  return selected;
}

std::vector<NewsRecord> select_in_period(std::span<const NewsRecord> records,
                                         const DateRange& period) {
  std::vector<NewsRecord> kept;
  for (const auto& record : records) {
    if (period.contains(record.timestamp)) kept.push_back(record);
  }
  return kept;
}

WordSet parse_word_list(std::istream& in) {
  WordSet words;
  std::string line;
  while (std::getline(in, line)) {
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto word = trim(line);
    if (!word.empty()) words.insert(to_lower_ascii(word));
  }
  return words;
}

WordSet parse_word_list(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_word_list(in);
}

WordSet load_word_list(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  return parse_word_list(in);
}

std::vector<std::string> tokenize_text(std::string_view text, const WordSet& stopwords) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty() && !stopwords.contains(current)) tokens.push_back(current);
    current.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (is_word_byte(c)) {
      current.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c);
    } else if ((c == '.' || c == ',') && !current.empty() && is_digit(current.back()) &&
               i + 1 < text.size() && is_digit(text[i + 1])) {
      current.push_back(c);
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

std::uint32_t Vocabulary::intern(std::string_view token) {
  const auto [it, inserted] =
      ids_.try_emplace(std::string(token), static_cast<std::uint32_t>(tokens_.size()));
  if (inserted) tokens_.emplace_back(token);
  return it->second;
}

std::optional<std::uint32_t> Vocabulary::find(std::string_view token) const {
  const auto it = ids_.find(std::string(token));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

Corpus::Corpus(std::string query_term, Vocabulary vocabulary, std::vector<Document> documents)
    : query_term_(std::move(query_term)),
      vocabulary_(std::move(vocabulary)),
      documents_(std::move(documents)) {
  const std::size_t vocab_size = vocabulary_.size();
  for (std::size_t i = 0; i < documents_.size(); ++i) {
    const auto& doc = documents_[i];
    if (doc.tokens.empty()) throw DataError("document '" + doc.id + "' has no tokens");
    for (const auto token : doc.tokens) {
      if (token >= vocab_size) {
        throw DataError("document '" + doc.id + "' references token id " +
                        std::to_string(token) + " outside the vocabulary");
      }
    }
    day_index_[doc.date].push_back(i);
    total_tokens_ += doc.tokens.size();
  }
}

Corpus tokenize(std::span<const NewsRecord> records, const WordSet& stopwords,
                std::string query_term, unsigned threads) {
  std::vector<std::vector<std::string>> streams(records.size());
  parallel_for(records.size(), threads, [&](std::size_t i) {
    const auto& record = records[i];
    std::string text;
    text.reserve(record.headline.size() + record.body.size() + 1);
    text.append(record.headline).append(" ").append(record.body);
    streams[i] = tokenize_text(text, stopwords);
  });

  Vocabulary vocabulary;
  std::vector<Document> documents;
  documents.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (streams[i].empty()) continue;
    Document doc{records[i].id, records[i].timestamp, {}};
    doc.tokens.reserve(streams[i].size());
    for (const auto& token : streams[i]) doc.tokens.push_back(vocabulary.intern(token));
    documents.push_back(std::move(doc));
  }
  return Corpus(std::move(query_term), std::move(vocabulary), std::move(documents));
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& vocabulary_path,
                 const std::filesystem::path& documents_path) {
  {
    auto out = open_output(vocabulary_path);
    const auto tokens = corpus.vocabulary().tokens();
    for (std::size_t id = 0; id < tokens.size(); ++id) out << id << '\t' << tokens[id] << '\n';
    if (!out) throw Error("write failed: " + vocabulary_path.string());
  }
  auto out = open_output(documents_path);
  for (const auto& doc : corpus.documents()) {
    out << doc.id << '\t' << doc.date.iso() << '\t';
    for (std::size_t i = 0; i < doc.tokens.size(); ++i) {
      if (i > 0) out << ' ';
      out << doc.tokens[i];
    }
    out << '\n';
  }
  if (!out) throw Error("write failed: " + documents_path.string());
}

Corpus load_corpus(const std::filesystem::path& vocabulary_path,
                   const std::filesystem::path& documents_path, std::string query_term) {
  Vocabulary vocabulary;
  {
    std::ifstream in = open_input(vocabulary_path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const auto tab = line.find('\t');
      if (tab == std::string::npos) {
        throw DataError(vocabulary_path.string() + ":" + std::to_string(line_no) +
                        ": expected token_id<TAB>token");
      }
      const auto id = parse_integer(std::string_view(line).substr(0, tab));
      if (id != static_cast<long long>(vocabulary.size())) {
        throw DataError(vocabulary_path.string() + ": token ids must be dense and ordered");
      }
      const auto token = std::string_view(line).substr(tab + 1);
      if (vocabulary.find(token)) {
        throw DataError(vocabulary_path.string() + ": duplicate token '" + std::string(token) + "'");
      }
      vocabulary.intern(token);
    }
  }
  std::vector<Document> documents;
  std::ifstream in = open_input(documents_path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 3) {
      throw DataError(documents_path.string() + ":" + std::to_string(line_no) +
                      ": expected doc_id<TAB>date<TAB>token ids");
    }
    Document doc{std::string(fields[0]), parse_date(fields[1]), {}};
    for (const auto id : split(fields[2], ' ')) {
      if (id.empty()) continue;
      doc.tokens.push_back(static_cast<std::uint32_t>(parse_integer(id)));
    }
    documents.push_back(std::move(doc));
  }
  return Corpus(std::move(query_term), std::move(vocabulary), std::move(documents));
}

}  // namespace newsflow
