#include "newsflow/market.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "newsflow/error.hpp"
#include "newsflow/tabular.hpp"

namespace newsflow {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double sorted_median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

}  // namespace

void RollingMedian::insert(double value) {
  if (lower_.empty() || value <= *lower_.rbegin()) {
    lower_.insert(value);
  } else {
    upper_.insert(value);
  }
  rebalance();
}

void RollingMedian::erase(double value) {
  if (!lower_.empty() && value <= *lower_.rbegin()) {
    lower_.erase(lower_.find(value));
  } else {
    upper_.erase(upper_.find(value));
  }
  rebalance();
}

void RollingMedian::rebalance() {
  if (lower_.size() > upper_.size() + 1) {
    auto last = std::prev(lower_.end());
    upper_.insert(*last);
    lower_.erase(last);
  } else if (upper_.size() > lower_.size()) {
    lower_.insert(*upper_.begin());
    upper_.erase(upper_.begin());
  }
}

double RollingMedian::median() const {
  if (lower_.empty()) return kNaN;
  if (lower_.size() > upper_.size()) return *lower_.rbegin();
  return (*lower_.rbegin() + *upper_.begin()) / 2.0;
}

std::vector<double> full_window_medians(std::span<const double> values, std::size_t window,
                                        WindowAlignment alignment) {
  if (window < 1) throw ConfigError("median window must be at least 1");
  const std::size_t n = values.size();
  std::vector<double> medians(n, kNaN);
  if (n < window) return medians;
  // Window [s, s + window) is reported at position s + offset.
  const std::size_t offset =
      alignment == WindowAlignment::centered ? (window - 1) / 2 : window - 1;
  RollingMedian rolling;
  for (std::size_t i = 0; i < window; ++i) rolling.insert(values[i]);
  for (std::size_t s = 0;; ++s) {
    medians[s + offset] = rolling.median();
    if (s + window >= n) break;
    rolling.erase(values[s]);
    rolling.insert(values[s + window]);
  }
  return medians;
}

std::ptrdiff_t VolumeSeries::index_of(Date d) const {
  const auto it = std::lower_bound(dates.begin(), dates.end(), d);
  if (it == dates.end() || *it != d) return -1;
  return it - dates.begin();
}

VolumeSeries moving_median_normalize(const MarketSeries& market, std::size_t window,
                                     WindowAlignment alignment) {
  if (window < 1) throw ConfigError("median window must be at least 1");
  const std::size_t n = market.volume.size();
  if (n == 0) throw DataError("market series is empty");
  if (market.dates.size() != n) throw DataError("market dates and volumes differ in length");
  if (std::all_of(market.volume.begin(), market.volume.end(), [](auto v) { return v == 0; })) {
    throw DataError("market volume is zero on every day; no valid divisor exists");
  }

  std::vector<double> values(market.volume.begin(), market.volume.end());
  VolumeSeries out{market.dates, market.volume, std::vector<double>(n), std::vector<double>(n)};

  if (n < window) {
    const double whole = sorted_median(values);
    if (!(whole > 0.0)) throw DataError("market volume median is zero; no valid divisor exists");
    std::fill(out.divisor.begin(), out.divisor.end(), whole);
  } else {
    const auto medians = full_window_medians(values, window, alignment);
    std::vector<std::size_t> valid;
    for (std::size_t t = 0; t < n; ++t) {
      if (medians[t] > 0.0) valid.push_back(t);
    }
    if (valid.empty()) throw DataError("every moving median is zero; no valid divisor exists");
    std::size_t next = 0;  // first valid position >= t
    for (std::size_t t = 0; t < n; ++t) {
      while (next < valid.size() && valid[next] < t) ++next;
      std::size_t source;
      if (next == valid.size()) {
        source = valid.back();
      } else if (valid[next] == t || next == 0) {
        source = valid[next];
      } else {
        const std::size_t before = valid[next - 1];
        source = (t - before <= valid[next] - t) ? before : valid[next];
      }
      out.divisor[t] = medians[source];
    }
  }
  for (std::size_t t = 0; t < n; ++t) out.normalized[t] = values[t] / out.divisor[t];
  return out;
}

double nearest_rank_percentile(std::vector<double> values, double percentile) {
  if (values.empty()) throw DataError("percentile of an empty sample");
  if (!(percentile > 0.0 && percentile < 100.0)) {
    throw ConfigError("percentile must lie in (0, 100)");
  }
  const double n = static_cast<double>(values.size());
  auto rank = static_cast<std::size_t>(std::ceil(percentile * n / 100.0 - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(rank - 1),
                   values.end());
  return values[rank - 1];
}

bool PeakSet::contains(Date d) const { return std::binary_search(peaks.begin(), peaks.end(), d); }

PeakSet detect_peaks(const VolumeSeries& series, Date study_start, int window_months,
                     double percentile, std::optional<Date> study_end) {
  if (window_months < 1) throw ConfigError("peak window must be at least one month");
  if (!(percentile > 0.0 && percentile < 100.0)) {
    throw ConfigError("percentile must lie in (0, 100)");
  }
  Date last = study_end.value_or(series.dates.empty() ? study_start : series.dates.back());
  if (!series.dates.empty()) last = std::max(last, series.dates.back());

  PeakSet result;
  std::size_t t = 0;
  while (t < series.size() && series.dates[t] < study_start) ++t;
  for (int i = 0;; ++i) {
    PeakWindow window;
    window.start = study_start.add_months(i * window_months);
    if (window.start > last) break;
    window.end = study_start.add_months((i + 1) * window_months);
    std::vector<double> values;
    const std::size_t begin = t;
    while (t < series.size() && series.dates[t] < window.end) values.push_back(series.normalized[t++]);
    window.observations = values.size();
    if (values.empty()) {
      window.threshold = kNaN;
    } else {
      window.threshold = nearest_rank_percentile(values, percentile);
      for (std::size_t j = begin; j < t; ++j) {
        if (series.normalized[j] > window.threshold) {
          result.peaks.push_back(series.dates[j]);
          ++window.peaks;
        }
      }
    }
    result.windows.push_back(window);
  }
  return result;
}

MarketSeries read_market_csv(const std::filesystem::path& path) {
  const auto table = read_csv(path);
  const auto date_col = table.column("date");
  const auto volume_col = table.column("volume");
  MarketSeries market;
  for (const auto& row : table.rows) {
    const Date d = parse_date(row[date_col]);
    if (!market.dates.empty() && !(market.dates.back() < d)) {
      throw DataError(path.string() + ": dates must be strictly increasing (at " + d.iso() + ")");
    }
    const double v = parse_double(row[volume_col]);
    if (!(v >= 0.0) || v != std::floor(v) || v > 9.0e15) {
      throw DataError(path.string() + ": volume on " + d.iso() +
                      " must be a nonnegative integer");
    }
    market.dates.push_back(d);
    market.volume.push_back(static_cast<std::int64_t>(v));
  }
  return market;
}

void write_market_csv(const MarketSeries& market, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "date,volume\n";
  for (std::size_t t = 0; t < market.dates.size(); ++t) {
    out << market.dates[t].iso() << ',' << market.volume[t] << '\n';
  }
  if (!out) throw Error("write failed: " + path.string());
}

void write_volume_csv(const VolumeSeries& series, const PeakSet* peaks,
                      const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "date,raw,normalized,is_peak\n";
  for (std::size_t t = 0; t < series.size(); ++t) {
    out << series.dates[t].iso() << ',' << series.raw[t] << ','
        << format_double(series.normalized[t]) << ','
        << (peaks && peaks->contains(series.dates[t]) ? 1 : 0) << '\n';
  }
  if (!out) throw Error("write failed: " + path.string());
}

VolumeSeries read_volume_csv(const std::filesystem::path& path) {
  const auto table = read_csv(path);
  const auto date_col = table.column("date");
  const auto raw_col = table.column("raw");
  const auto norm_col = table.column("normalized");
  VolumeSeries series;
  for (const auto& row : table.rows) {
    series.dates.push_back(parse_date(row[date_col]));
    series.raw.push_back(parse_integer(row[raw_col]));
    series.normalized.push_back(parse_double(row[norm_col]));
    const double n = series.normalized.back();
    series.divisor.push_back(n > 0.0 ? static_cast<double>(series.raw.back()) / n : kNaN);
  }
  return series;
}

void write_peak_windows_csv(const PeakSet& peaks, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "window_start,window_end,observations,threshold,peaks\n";
  for (const auto& w : peaks.windows) {
    out << w.start.iso() << ',' << w.end.iso() << ',' << w.observations << ','
        << format_double(w.threshold) << ',' << w.peaks << '\n';
  }
  if (!out) throw Error("write failed: " + path.string());
}

PeakSet read_peaks(const std::filesystem::path& volume_csv,
                   const std::filesystem::path& windows_csv) {
  PeakSet peaks;
  {
    const auto table = read_csv(volume_csv);
    const auto date_col = table.column("date");
    const auto peak_col = table.column("is_peak");
    for (const auto& row : table.rows) {
      if (parse_integer(row[peak_col]) != 0) peaks.peaks.push_back(parse_date(row[date_col]));
    }
    std::sort(peaks.peaks.begin(), peaks.peaks.end());
  }
  const auto table = read_csv(windows_csv);
  for (const auto& row : table.rows) {
    PeakWindow w;
    w.start = parse_date(row[table.column("window_start")]);
    w.end = parse_date(row[table.column("window_end")]);
    w.observations = static_cast<std::size_t>(parse_integer(row[table.column("observations")]));
    w.threshold = parse_double(row[table.column("threshold")]);
    w.peaks = static_cast<std::size_t>(parse_integer(row[table.column("peaks")]));
    peaks.windows.push_back(w);
  }
  return peaks;
}

}  // namespace newsflow
