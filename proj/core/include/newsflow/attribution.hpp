#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "newsflow/date.hpp"
#include "newsflow/market.hpp"
#include "newsflow/random.hpp"
#include "newsflow/topic_series.hpp"

namespace newsflow {

/// Regression inputs aligned by trading day: x is rows x cols (row-major)
/// topic news volume, y the normalized trading volume.
struct Design {
  std::vector<Date> dates;
  std::vector<int> topic_ids;
  std::vector<double> x;
  std::vector<double> y;

  std::size_t rows() const { return y.size(); }
  std::size_t cols() const { return topic_ids.size(); }
  double at(std::size_t t, std::size_t k) const { return x[t * topic_ids.size() + k]; }
  std::ptrdiff_t index_of(Date d) const;
};

/// One row per trading day of `volume` that falls on the series' date axis;
/// columns are the requested topic ids. Throws DataError when no day
/// overlaps or a topic id is missing from the series.
Design build_design(const TopicSeries& series, std::span<const int> topic_ids,
                    const VolumeSeries& volume);

struct LassoOptions {
  double tolerance = 1e-8;  // on the largest coordinate change in one sweep
  std::size_t max_sweeps = 10000;
};

struct RegressionFit {
  std::vector<int> topic_ids;
  std::vector<double> weights;  // nonnegative, raw news-volume units
  double intercept = 0.0;
  double lambda = 0.0;
  std::vector<double> residuals;  // y - intercept - x * weights
  std::vector<double> cv_trace;   // per-repeat cross-validation winners
  std::vector<double> objective_trace;  // objective after each sweep
  std::vector<int> zero_variance_topics;
  std::size_t sweeps = 0;
  bool converged = false;

  bool any_positive() const;
};

/// Minimizes
///   (1/2T) sum_t (y_t - b - sum_k w_k x_tk)^2 + lambda * sum_k w_k,  w >= 0,
/// with b unpenalized, by cyclic coordinate descent on the centered problem.
/// Each coordinate takes the exact nonnegative soft-threshold step
///   w_k <- max(0, w_k - (g_k + lambda) / G_kk)
/// where G is the centered Gram matrix / T and g the gradient of the smooth
/// part. Columns with zero variance keep w_k = 0 (logged as a warning).
/// Throws DataError on non-finite input and ConfigError on T < 2 or lambda < 0.
RegressionFit fit_nnlasso(const Design& design, double lambda, const LassoOptions& options = {});

/// The objective above evaluated directly from the rows.
double nnlasso_objective(const Design& design, std::span<const double> weights, double intercept,
                         double lambda);

/// Smallest lambda at which every weight is zero: max_k (1/T) sum_t
/// (x_tk - mean_k)(y_t - mean_y), floored at 0.
double lambda_max(const Design& design);

/// `points` values spaced evenly in log from lambda_max down to
/// lambda_max * ratio. A single 0 when lambda_max is 0.
std::vector<double> lambda_grid(double lambda_max, std::size_t points = 100, double ratio = 1e-4);

/// fold_of_row[t] in [0, folds): rows permuted by `rng`, then dealt round-robin.
std::vector<std::size_t> random_fold_assignment(std::size_t rows, std::size_t folds, Rng& rng);

/// Index into `grid` with the smallest mean held-out squared error for the
/// given partition. Each fold's path is solved from grid[0] downward with
/// warm starts. Ties go to the larger lambda.
std::size_t cv_select(const Design& design, std::span<const double> grid,
                      std::span<const std::size_t> fold_of_row, std::size_t folds,
                      const LassoOptions& options = {});

struct CvOptions {
  std::size_t folds = 10;
  std::size_t repeats = 100;
  std::size_t grid_points = 100;
  double grid_ratio = 1e-4;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  LassoOptions solver;
};

struct LambdaChoice {
  double lambda = 0.0;
  std::vector<double> grid;
  std::vector<double> per_repeat;
  std::vector<std::size_t> winner_index;
};

/// Mean of the per-repeat cross-validation winners. Repeat r draws its
/// partition from Rng(derive_seed(seed, r)), so the result does not depend
/// on `threads`. Throws ConfigError when rows < folds, folds < 2 or
/// repeats < 1.
LambdaChoice choose_lambda(const Design& design, const CvOptions& options);

struct TopicSelection {
  std::vector<int> topic_ids;
  std::vector<double> contribution;  // sum over peak days of w_k * x_tk
  std::vector<double> fve;
  std::vector<int> selected;
  double threshold = 0.005;
  bool degenerate = false;  // no positive contribution on peak days
};

/// Share of the fitted news-driven volume on peak days per topic; selects
/// topics with fve > threshold. Throws DataError for a peak outside the design.
TopicSelection compute_fve(const RegressionFit& fit, const Design& design, const PeakSet& peaks,
                           double threshold = 0.005);

struct EvaluationReport {
  double fpe = 0.0;
  std::vector<Date> explained_peaks;
  std::size_t total_peaks = 0;
  std::size_t degenerate_peaks = 0;  // peaks with y - b <= 0
  bool null_mode = false;

  friend bool operator==(const EvaluationReport&, const EvaluationReport&) = default;
};

/// A peak day t is explained when (yhat_t - b) >= ratio * (y_t - b); when
/// y_t - b <= 0 it is explained iff yhat_t - b >= 0. Throws DataError when
/// there are no peaks.
EvaluationReport compute_fpe(const RegressionFit& fit, const Design& design, const PeakSet& peaks,
                             double ratio = 0.10);

/// Copy of `fit` with every weight outside `keep` set to zero; the intercept
/// is unchanged and residuals are recomputed.
RegressionFit restrict_to(const RegressionFit& fit, const Design& design, std::span<const int> keep);

/// JSON persistence of a fit (weights, intercept, lambda, cv trace).
void write_fit_json(const RegressionFit& fit, const std::filesystem::path& path);
RegressionFit read_fit_json(const std::filesystem::path& path, const Design& design);

}  // namespace newsflow
