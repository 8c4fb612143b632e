#include "newsflow/config.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "newsflow/error.hpp"
#include "newsflow/tabular.hpp"

namespace newsflow {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"paths", {"news", "market", "stopwords", "boilerplate_words", "market_words", "output_dir"}},
      {"study", {"stock", "company", "term", "start", "end", "seed", "min_records", "threads"}},
      {"schema",
       {"id_field", "timestamp_field", "headline_field", "body_field", "utc_offset_minutes",
        "strict"}},
      {"lda", {"num_topics", "alpha", "beta", "burn_in_iterations", "loglik_interval"}},
      {"prune", {"top_words", "min_active_days"}},
      {"market", {"median_window", "alignment"}},
      {"peaks", {"window_months", "percentile"}},
      {"regression",
       {"folds", "repeats", "grid_points", "grid_ratio", "fve_threshold", "fpe_ratio", "tolerance",
        "max_sweeps"}},
      {"graph", {"jsd_threshold", "format"}},
  };
  return keys;
}

class Reader {
 public:
  explicit Reader(const pt::ptree& tree) : tree_(tree) {}

  std::optional<std::string> raw(const std::string& section, const std::string& key) const {
    const auto s = tree_.get_child_optional(section);
    if (!s) return std::nullopt;
    const auto v = s->get_optional<std::string>(key);
    if (!v) return std::nullopt;
    return std::string(trim(*v));
  }

  void text(const std::string& section, const std::string& key, std::string& out) const {
    if (auto v = raw(section, key)) out = *v;
  }

  template <typename T>
  void integer(const std::string& section, const std::string& key, T& out) const {
    if (auto v = raw(section, key)) {
      long long parsed;
      try {
        parsed = parse_integer(*v);
      } catch (const DataError&) {
        throw ConfigError(section + "." + key + ": '" + *v + "' is not an integer");
      }
      if (parsed < 0 && std::is_unsigned_v<T>) {
        throw ConfigError(section + "." + key + " must be nonnegative");
      }
      out = static_cast<T>(parsed);
    }
  }

  void real(const std::string& section, const std::string& key, double& out) const {
    if (auto v = raw(section, key)) {
      try {
        out = parse_double(*v);
      } catch (const DataError&) {
        throw ConfigError(section + "." + key + ": '" + *v + "' is not a number");
      }
    }
  }

  void boolean(const std::string& section, const std::string& key, bool& out) const {
    if (auto v = raw(section, key)) {
      const auto lower = to_lower_ascii(*v);
      if (lower == "true" || lower == "1" || lower == "yes") {
        out = true;
      } else if (lower == "false" || lower == "0" || lower == "no") {
        out = false;
      } else {
        throw ConfigError(section + "." + key + ": '" + *v + "' is not a boolean");
      }
    }
  }

  void date(const std::string& section, const std::string& key, Date& out) const {
    if (auto v = raw(section, key)) {
      try {
        out = parse_date(*v);
      } catch (const DataError&) {
        throw ConfigError(section + "." + key + ": '" + *v + "' is not a YYYY-MM-DD date");
      }
    }
  }

  void path(const std::string& section, const std::string& key, const std::filesystem::path& base,
            std::filesystem::path& out) const {
    if (auto v = raw(section, key)) {
      if (v->empty()) {
        out.clear();
      } else {
        std::filesystem::path p(*v);
        out = p.is_absolute() || base.empty() ? p : (base / p).lexically_normal();
      }
    }
  }

 private:
  const pt::ptree& tree_;
};

void check_known(const pt::ptree& tree) {
  const auto& keys = known_keys();
  for (const auto& [section, body] : tree) {
    const auto it = keys.find(section);
    if (it == keys.end()) throw ConfigError("unknown config section [" + section + "]");
    for (const auto& [key, value] : body) {
      if (!it->second.count(key)) throw ConfigError("unknown config key " + section + "." + key);
    }
  }
}

std::string alignment_text(WindowAlignment a) {
  return a == WindowAlignment::centered ? "centered" : "trailing";
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

}  // namespace

void PipelineConfig::validate() const {
  require(!study.term.empty(), "study.term must not be empty");
  require(!study.stock.empty(), "study.stock must not be empty");
  require(!study.period.empty(), "study period is empty (end before start)");
  require(lda.num_topics >= 2, "lda.num_topics must be at least 2");
  lda.validate();
  require(prune.top_words >= 1, "prune.top_words must be at least 1");
  require(market.median_window >= 1, "market.median_window must be at least 1");
  require(peaks.window_months >= 1, "peaks.window_months must be at least 1");
  require(peaks.percentile > 0.0 && peaks.percentile < 100.0, "peaks.percentile must lie in (0, 100)");
  require(regression.folds >= 2, "regression.folds must be at least 2");
  require(regression.repeats >= 1, "regression.repeats must be at least 1");
  require(regression.grid_points >= 1, "regression.grid_points must be at least 1");
  require(regression.grid_ratio > 0.0 && regression.grid_ratio <= 1.0,
          "regression.grid_ratio must lie in (0, 1]");
  require(regression.fve_threshold >= 0.0 && regression.fve_threshold < 1.0,
          "regression.fve_threshold must lie in [0, 1)");
  require(regression.fpe_ratio >= 0.0, "regression.fpe_ratio must be nonnegative");
  require(regression.solver.tolerance > 0.0, "regression.tolerance must be positive");
  require(regression.solver.max_sweeps >= 1, "regression.max_sweeps must be at least 1");
  require(graph.jsd_threshold > 0.0 && graph.jsd_threshold <= 1.0,
          "graph.jsd_threshold must lie in (0, 1]");
  require(!paths.news.empty(), "paths.news is required");
  require(!paths.market.empty(), "paths.market is required");
  require(!paths.output_dir.empty(), "paths.output_dir is required");
}

void PipelineConfig::check_inputs() const {
  const auto must_exist = [](const std::filesystem::path& p, const char* what) {
    if (p.empty()) return;
    std::error_code ec;
    if (!std::filesystem::is_regular_file(p, ec)) {
      throw ConfigError(std::string(what) + " file not found: " + p.string());
    }
  };
  must_exist(paths.news, "news");
  must_exist(paths.market, "market");
  must_exist(paths.stopwords, "stopwords");
  must_exist(paths.boilerplate_words, "boilerplate words");
  must_exist(paths.market_words, "market words");
}

PipelineConfig parse_config(std::istream& in, const std::filesystem::path& base_dir) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  check_known(tree);
  const Reader r(tree);
  PipelineConfig c;

  r.path("paths", "news", base_dir, c.paths.news);
  r.path("paths", "market", base_dir, c.paths.market);
  r.path("paths", "stopwords", base_dir, c.paths.stopwords);
  r.path("paths", "boilerplate_words", base_dir, c.paths.boilerplate_words);
  r.path("paths", "market_words", base_dir, c.paths.market_words);
  r.path("paths", "output_dir", base_dir, c.paths.output_dir);

  r.text("study", "stock", c.study.stock);
  r.text("study", "company", c.study.company);
  r.text("study", "term", c.study.term);
  if (c.study.stock.empty()) c.study.stock = c.study.term;
  if (c.study.company.empty()) c.study.company = c.study.stock;
  require(r.raw("study", "start").has_value() && r.raw("study", "end").has_value(),
          "study.start and study.end are required");
  r.date("study", "start", c.study.period.first);
  r.date("study", "end", c.study.period.last);
  r.integer("study", "seed", c.study.seed);
  r.integer("study", "min_records", c.study.min_records);
  r.integer("study", "threads", c.study.threads);

  r.text("schema", "id_field", c.schema.id_field);
  r.text("schema", "timestamp_field", c.schema.timestamp_field);
  r.text("schema", "headline_field", c.schema.headline_field);
  r.text("schema", "body_field", c.schema.body_field);
  long long offset = 0;
  r.integer("schema", "utc_offset_minutes", offset);
  c.schema.utc_offset = std::chrono::minutes(offset);
  r.boolean("schema", "strict", c.schema.strict);

  r.integer("lda", "num_topics", c.lda.num_topics);
  if (auto alpha = r.raw("lda", "alpha"); alpha && !alpha->empty() && *alpha != "auto") {
    double a = 0.0;
    r.real("lda", "alpha", a);
    c.lda.alpha = a;
  }
  r.real("lda", "beta", c.lda.beta);
  r.integer("lda", "burn_in_iterations", c.lda.burn_in_iterations);
  r.integer("lda", "loglik_interval", c.lda.loglik_interval);

  r.integer("prune", "top_words", c.prune.top_words);
  r.integer("prune", "min_active_days", c.prune.min_active_days);

  r.integer("market", "median_window", c.market.median_window);
  if (auto a = r.raw("market", "alignment")) {
    if (*a == "centered") {
      c.market.alignment = WindowAlignment::centered;
    } else if (*a == "trailing") {
      c.market.alignment = WindowAlignment::trailing;
    } else {
      throw ConfigError("market.alignment must be centered or trailing");
    }
  }

  r.integer("peaks", "window_months", c.peaks.window_months);
  r.real("peaks", "percentile", c.peaks.percentile);

  r.integer("regression", "folds", c.regression.folds);
  r.integer("regression", "repeats", c.regression.repeats);
  r.integer("regression", "grid_points", c.regression.grid_points);
  r.real("regression", "grid_ratio", c.regression.grid_ratio);
  r.real("regression", "fve_threshold", c.regression.fve_threshold);
  r.real("regression", "fpe_ratio", c.regression.fpe_ratio);
  r.real("regression", "tolerance", c.regression.solver.tolerance);
  r.integer("regression", "max_sweeps", c.regression.solver.max_sweeps);

  r.real("graph", "jsd_threshold", c.graph.jsd_threshold);
  if (auto f = r.raw("graph", "format")) c.graph.format = parse_graph_format(*f);
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_config(in, path.parent_path());
}

std::string canonical_config(const PipelineConfig& c) {
  std::ostringstream out;
  const auto p = [](const std::filesystem::path& path) { return path.generic_string(); };
  out << "[paths]\n"
      << "news = " << p(c.paths.news) << '\n'
      << "market = " << p(c.paths.market) << '\n'
      << "stopwords = " << p(c.paths.stopwords) << '\n'
      << "boilerplate_words = " << p(c.paths.boilerplate_words) << '\n'
      << "market_words = " << p(c.paths.market_words) << '\n'
      << "output_dir = " << p(c.paths.output_dir) << "\n\n";
  out << "[study]\n"
      << "stock = " << c.study.stock << '\n'
      << "company = " << c.study.company << '\n'
      << "term = " << c.study.term << '\n'
      << "start = " << c.study.period.first.iso() << '\n'
      << "end = " << c.study.period.last.iso() << '\n'
      << "seed = " << c.study.seed << '\n'
      << "min_records = " << c.study.min_records << '\n'
      << "threads = " << c.study.threads << "\n\n";
  out << "[schema]\n"
      << "id_field = " << c.schema.id_field << '\n'
      << "timestamp_field = " << c.schema.timestamp_field << '\n'
      << "headline_field = " << c.schema.headline_field << '\n'
      << "body_field = " << c.schema.body_field << '\n'
      << "utc_offset_minutes = " << c.schema.utc_offset.count() << '\n'
      << "strict = " << (c.schema.strict ? "true" : "false") << "\n\n";
  out << "[lda]\n"
      << "num_topics = " << c.lda.num_topics << '\n'
      << "alpha = " << (c.lda.alpha ? format_double(*c.lda.alpha) : std::string("auto")) << '\n'
      << "beta = " << format_double(c.lda.beta) << '\n'
      << "burn_in_iterations = " << c.lda.burn_in_iterations << '\n'
      << "loglik_interval = " << c.lda.loglik_interval << "\n\n";
  out << "[prune]\n"
      << "top_words = " << c.prune.top_words << '\n'
      << "min_active_days = " << c.prune.min_active_days << "\n\n";
  out << "[market]\n"
      << "median_window = " << c.market.median_window << '\n'
      << "alignment = " << alignment_text(c.market.alignment) << "\n\n";
  out << "[peaks]\n"
      << "window_months = " << c.peaks.window_months << '\n'
      << "percentile = " << format_double(c.peaks.percentile) << "\n\n";
  out << "[regression]\n"
      << "folds = " << c.regression.folds << '\n'
      << "repeats = " << c.regression.repeats << '\n'
      << "grid_points = " << c.regression.grid_points << '\n'
      << "grid_ratio = " << format_double(c.regression.grid_ratio) << '\n'
      << "fve_threshold = " << format_double(c.regression.fve_threshold) << '\n'
      << "fpe_ratio = " << format_double(c.regression.fpe_ratio) << '\n'
      << "tolerance = " << format_double(c.regression.solver.tolerance) << '\n'
      << "max_sweeps = " << c.regression.solver.max_sweeps << "\n\n";
  out << "[graph]\n"
      << "jsd_threshold = " << format_double(c.graph.jsd_threshold) << '\n'
      << "format = " << to_string(c.graph.format) << '\n';
  return out.str();
}

void save_config(const PipelineConfig& config, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << canonical_config(config);
  if (!out) throw Error("write failed: " + path.string());
}

std::string fnv1a_hex(std::string_view text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (const unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char buffer[17];
  std::snprintf(buffer, sizeof buffer, "%016llx", static_cast<unsigned long long>(hash));
  return buffer;
}

std::string config_hash(const PipelineConfig& config) { return fnv1a_hex(canonical_config(config)); }

}  // namespace newsflow
