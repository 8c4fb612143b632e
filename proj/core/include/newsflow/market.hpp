#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "newsflow/date.hpp"

namespace newsflow {

/// Exact sliding-window median over a multiset of values, O(log n) per update.
/// For an even count the median is the mean of the two middle values.
class RollingMedian {
 public:
  void insert(double value);
  /// Removes one copy of `value`; it must be present.
  void erase(double value);
  double median() const;
  std::size_t size() const { return lower_.size() + upper_.size(); }

 private:
  void rebalance();
  std::multiset<double> lower_;  // holds ceil(n/2) smallest values
  std::multiset<double> upper_;
};

enum class WindowAlignment { centered, trailing };

/// Medians of every full window of `window` observations. Entry t is NaN
/// where the window would cross either end of the series.
///   centered: [t - (window-1)/2, t + window/2]
///   trailing: [t - window + 1, t]
std::vector<double> full_window_medians(std::span<const double> values, std::size_t window,
                                        WindowAlignment alignment);

struct MarketSeries {
  std::vector<Date> dates;
  std::vector<std::int64_t> volume;
};

struct VolumeSeries {
  std::vector<Date> dates;
  std::vector<std::int64_t> raw;
  std::vector<double> divisor;
  std::vector<double> normalized;

  std::size_t size() const { return dates.size(); }
  /// Position of `d`, or -1.
  std::ptrdiff_t index_of(Date d) const;
};

/// normalized[t] = raw[t] / divisor[t], where divisor[t] is the moving median
/// of the full window around t. Positions without a full window, and
/// positions whose median is zero, take the nearest position that has a
/// full, nonzero median (the earlier one on a tie). When the series is
/// shorter than the window the whole-series median is used everywhere.
/// Throws DataError for an all-zero series or when no nonzero median exists.
VolumeSeries moving_median_normalize(const MarketSeries& market, std::size_t window,
                                     WindowAlignment alignment = WindowAlignment::centered);

/// ceil(p/100 * n)-th smallest value (1-based, clamped to [1, n]).
double nearest_rank_percentile(std::vector<double> values, double percentile);

struct PeakWindow {
  Date start;
  Date end;  // exclusive
  std::size_t observations = 0;
  double threshold = 0.0;  // NaN for an empty window
  std::size_t peaks = 0;
};

struct PeakSet {
  std::vector<PeakWindow> windows;
  std::vector<Date> peaks;  // sorted

  bool contains(Date d) const;
};

/// Splits the calendar into consecutive windows of `window_months` starting
/// at `study_start` and covering up to `study_end` (default: the last date).
/// In each window the threshold is the nearest-rank percentile of the
/// normalized volume; peaks are days strictly above it.
PeakSet detect_peaks(const VolumeSeries& series, Date study_start, int window_months = 6,
                     double percentile = 95.0, std::optional<Date> study_end = std::nullopt);

/// CSV with header `date,volume`; dates strictly increasing, volumes
/// nonnegative integers.
MarketSeries read_market_csv(const std::filesystem::path& path);
void write_market_csv(const MarketSeries& market, const std::filesystem::path& path);

/// CSV date,raw,normalized,is_peak.
void write_volume_csv(const VolumeSeries& series, const PeakSet* peaks,
                      const std::filesystem::path& path);
VolumeSeries read_volume_csv(const std::filesystem::path& path);

/// CSV window_start,window_end,observations,threshold,peaks.
void write_peak_windows_csv(const PeakSet& peaks, const std::filesystem::path& path);
/// Rebuilds a PeakSet from a volume CSV's is_peak column and a windows CSV.
PeakSet read_peaks(const std::filesystem::path& volume_csv,
                   const std::filesystem::path& windows_csv);

}  // namespace newsflow
