#include "newsflow/attribution.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "newsflow/error.hpp"
#include "newsflow/parallel.hpp"
#include "newsflow/tabular.hpp"

namespace newsflow {

namespace {

/// Centered sufficient statistics of a subset of design rows. With b chosen
/// optimally the objective becomes
///   0.5 * (syy - 2 c'w + w'Gw) + lambda * sum(w)
/// with G = Xc'Xc / n, c = Xc'yc / n, syy = yc'yc / n.
struct CenteredProblem {
  std::size_t n = 0;
  std::size_t k = 0;
  std::vector<double> gram;
  std::vector<double> cross;
  std::vector<double> x_mean;
  double y_mean = 0.0;
  double syy = 0.0;
  std::vector<char> usable;  // column has positive variance
};

CenteredProblem center(const Design& design, std::span<const std::size_t> rows) {
  CenteredProblem p;
  p.n = rows.size();
  p.k = design.cols();
  const std::size_t K = p.k;
  const double inv_n = 1.0 / static_cast<double>(p.n);
  p.x_mean.assign(K, 0.0);
  for (const auto t : rows) {
    p.y_mean += design.y[t];
    for (std::size_t j = 0; j < K; ++j) p.x_mean[j] += design.at(t, j);
  }
  p.y_mean *= inv_n;
  for (auto& m : p.x_mean) m *= inv_n;

  p.gram.assign(K * K, 0.0);
  p.cross.assign(K, 0.0);
  std::vector<double> xc(K);
  for (const auto t : rows) {
    const double yc = design.y[t] - p.y_mean;
    p.syy += yc * yc;
    for (std::size_t j = 0; j < K; ++j) xc[j] = design.at(t, j) - p.x_mean[j];
    for (std::size_t i = 0; i < K; ++i) {
      p.cross[i] += xc[i] * yc;
      for (std::size_t j = i; j < K; ++j) p.gram[i * K + j] += xc[i] * xc[j];
    }
  }
  p.syy *= inv_n;
  for (std::size_t i = 0; i < K; ++i) {
    p.cross[i] *= inv_n;
    for (std::size_t j = i; j < K; ++j) {
      p.gram[i * K + j] *= inv_n;
      p.gram[j * K + i] = p.gram[i * K + j];
    }
  }
  p.usable.assign(K, 0);
  for (std::size_t j = 0; j < K; ++j) {
    const double scale = std::max(1.0, p.x_mean[j] * p.x_mean[j]);
    p.usable[j] = p.gram[j * K + j] > 1e-14 * scale ? 1 : 0;
  }
  return p;
}

double centered_objective(const CenteredProblem& p, std::span<const double> w,
                          std::span<const double> grad, double lambda) {
  // w'Gw = w'(grad + c)
  double wg = 0.0, cw = 0.0, l1 = 0.0;
  for (std::size_t j = 0; j < p.k; ++j) {
    wg += w[j] * grad[j];
    cw += p.cross[j] * w[j];
    l1 += w[j];
  }
  return 0.5 * (p.syy + wg - cw) + lambda * l1;
}

struct CdState {
  std::vector<double> w;
  std::size_t sweeps = 0;
  bool converged = false;
  std::vector<double> objective_trace;
};

/// Coordinate descent from `state.w`; keeps unusable columns at zero.
void coordinate_descent(const CenteredProblem& p, double lambda, const LassoOptions& options,
                        CdState& state, bool trace) {
  const std::size_t K = p.k;
  state.w.resize(K, 0.0);
  std::vector<double> grad(K);
  for (std::size_t i = 0; i < K; ++i) {
    if (!p.usable[i]) state.w[i] = 0.0;
  }
  for (std::size_t i = 0; i < K; ++i) {
    double g = -p.cross[i];
    for (std::size_t j = 0; j < K; ++j) g += p.gram[i * K + j] * state.w[j];
    grad[i] = g;
  }
  state.sweeps = 0;
  state.converged = false;
  while (state.sweeps < options.max_sweeps) {
    double max_change = 0.0;
    for (std::size_t j = 0; j < K; ++j) {
      if (!p.usable[j]) continue;
      const double current = state.w[j];
      const double updated = std::max(0.0, current - (grad[j] + lambda) / p.gram[j * K + j]);
      const double delta = updated - current;
      if (delta != 0.0) {
        state.w[j] = updated;
        const double* column = p.gram.data() + j * K;
        for (std::size_t i = 0; i < K; ++i) grad[i] += column[i] * delta;
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    ++state.sweeps;
    if (trace) state.objective_trace.push_back(centered_objective(p, state.w, grad, lambda));
    if (max_change < options.tolerance) {
      state.converged = true;
      break;
    }
  }
}

void check_finite(const Design& design) {
  const auto finite = [](double v) { return std::isfinite(v); };
  if (!std::all_of(design.x.begin(), design.x.end(), finite) ||
      !std::all_of(design.y.begin(), design.y.end(), finite)) {
    throw DataError("regression inputs contain non-finite values");
  }
  if (design.x.size() != design.rows() * design.cols()) {
    throw DataError("design matrix shape does not match its rows and columns");
  }
}

std::vector<double> compute_residuals(const Design& design, std::span<const double> w, double b) {
  std::vector<double> residuals(design.rows());
  for (std::size_t t = 0; t < design.rows(); ++t) {
    double fitted = b;
    for (std::size_t k = 0; k < design.cols(); ++k) fitted += w[k] * design.at(t, k);
    residuals[t] = design.y[t] - fitted;
  }
  return residuals;
}

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), 0);
  return rows;
}

double news_part(const RegressionFit& fit, const Design& design, std::size_t t) {
  double sum = 0.0;
  for (std::size_t k = 0; k < design.cols(); ++k) sum += fit.weights[k] * design.at(t, k);
  return sum;
}

std::size_t require_row(const Design& design, Date d) {
  const auto t = design.index_of(d);
  if (t < 0) throw DataError("peak day " + d.iso() + " is not a regression row");
  return static_cast<std::size_t>(t);
}

}  // namespace

std::ptrdiff_t Design::index_of(Date d) const {
  const auto it = std::lower_bound(dates.begin(), dates.end(), d);
  if (it == dates.end() || *it != d) return -1;
  return it - dates.begin();
}

bool RegressionFit::any_positive() const {
  return std::any_of(weights.begin(), weights.end(), [](double w) { return w > 0.0; });
}

Design build_design(const TopicSeries& series, std::span<const int> topic_ids,
                    const VolumeSeries& volume) {
  std::vector<std::size_t> rows_of_topic;
  for (const int id : topic_ids) {
    const auto& ids = series.topic_ids();
    const auto it = std::find(ids.begin(), ids.end(), id);
    if (it == ids.end()) throw DataError("topic " + std::to_string(id) + " is not in the series");
    rows_of_topic.push_back(static_cast<std::size_t>(it - ids.begin()));
  }
  Design design;
  design.topic_ids.assign(topic_ids.begin(), topic_ids.end());
  for (std::size_t t = 0; t < volume.size(); ++t) {
    const auto day = series.index_of(volume.dates[t]);
    if (day < 0) continue;
    design.dates.push_back(volume.dates[t]);
    design.y.push_back(volume.normalized[t]);
    for (const auto k : rows_of_topic) {
      design.x.push_back(static_cast<double>(series.at(k, static_cast<std::size_t>(day))));
    }
  }
  if (design.rows() == 0) throw DataError("no trading day overlaps the news period");
  return design;
}

RegressionFit fit_nnlasso(const Design& design, double lambda, const LassoOptions& options) {
  if (design.rows() < 2) throw ConfigError("nnlasso: need at least two observations");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("nnlasso: lambda must be >= 0");
  check_finite(design);

  const auto problem = center(design, all_rows(design.rows()));
  RegressionFit fit;
  fit.topic_ids = design.topic_ids;
  fit.lambda = lambda;
  for (std::size_t k = 0; k < problem.k; ++k) {
    if (!problem.usable[k]) {
      fit.zero_variance_topics.push_back(design.topic_ids[k]);
      spdlog::warn("topic {} has zero variance over the regression days; weight forced to 0",
                   design.topic_ids[k]);
    }
  }
  CdState state;
  coordinate_descent(problem, lambda, options, state, true);
  if (!state.converged) {
    spdlog::warn("nnlasso did not converge within {} sweeps", options.max_sweeps);
  }
  fit.weights = std::move(state.w);
  fit.sweeps = state.sweeps;
  fit.converged = state.converged;
  fit.objective_trace = std::move(state.objective_trace);
  fit.intercept = problem.y_mean;
  for (std::size_t k = 0; k < problem.k; ++k) fit.intercept -= problem.x_mean[k] * fit.weights[k];
  fit.residuals = compute_residuals(design, fit.weights, fit.intercept);
  return fit;
}

double nnlasso_objective(const Design& design, std::span<const double> weights, double intercept,
                         double lambda) {
  const auto residuals = compute_residuals(design, weights, intercept);
  double squared = 0.0;
  for (const double r : residuals) squared += r * r;
  double l1 = 0.0;
  for (const double w : weights) l1 += w;
  return squared / (2.0 * static_cast<double>(design.rows())) + lambda * l1;
}

double lambda_max(const Design& design) {
  check_finite(design);
  const auto problem = center(design, all_rows(design.rows()));
  double best = 0.0;
  for (std::size_t k = 0; k < problem.k; ++k) {
    if (problem.usable[k]) best = std::max(best, problem.cross[k]);
  }
  return best;
}

std::vector<double> lambda_grid(double lambda_max, std::size_t points, double ratio) {
  if (!(lambda_max > 0.0)) return {0.0};
  if (points < 1) throw ConfigError("lambda grid needs at least one point");
  if (!(ratio > 0.0 && ratio <= 1.0)) throw ConfigError("lambda grid ratio must lie in (0, 1]");
  std::vector<double> grid(points);
  const double log_ratio = std::log(ratio);
  for (std::size_t i = 0; i < points; ++i) {
    const double frac = points == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(points - 1);
    grid[i] = lambda_max * std::exp(log_ratio * frac);
  }
  grid.front() = lambda_max;
  return grid;
}

std::vector<std::size_t> random_fold_assignment(std::size_t rows, std::size_t folds, Rng& rng) {
  std::vector<std::size_t> order = all_rows(rows);
  rng.shuffle(order);
  std::vector<std::size_t> fold_of_row(rows);
  for (std::size_t i = 0; i < rows; ++i) fold_of_row[order[i]] = i % folds;
  return fold_of_row;
}

std::size_t cv_select(const Design& design, std::span<const double> grid,
                      std::span<const std::size_t> fold_of_row, std::size_t folds,
                      const LassoOptions& options) {
  if (grid.empty()) throw ConfigError("cv_select: empty lambda grid");
  if (fold_of_row.size() != design.rows()) throw ConfigError("cv_select: fold map size mismatch");
  std::vector<double> mean_error(grid.size(), 0.0);
  std::vector<std::size_t> train, test;
  for (std::size_t f = 0; f < folds; ++f) {
    train.clear();
    test.clear();
    for (std::size_t t = 0; t < design.rows(); ++t) {
      (fold_of_row[t] == f ? test : train).push_back(t);
    }
    if (test.empty() || train.size() < 2) continue;
    const auto problem = center(design, train);
    CdState state;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      coordinate_descent(problem, grid[g], options, state, false);
      double b = problem.y_mean;
      for (std::size_t k = 0; k < problem.k; ++k) b -= problem.x_mean[k] * state.w[k];
      double error = 0.0;
      for (const auto t : test) {
        double fitted = b;
        for (std::size_t k = 0; k < problem.k; ++k) fitted += state.w[k] * design.at(t, k);
        const double r = design.y[t] - fitted;
        error += r * r;
      }
      mean_error[g] += error / static_cast<double>(test.size()) / static_cast<double>(folds);
    }
  }
  return static_cast<std::size_t>(std::min_element(mean_error.begin(), mean_error.end()) -
                                  mean_error.begin());
}

LambdaChoice choose_lambda(const Design& design, const CvOptions& options) {
  if (options.folds < 2) throw ConfigError("cross validation needs at least 2 folds");
  if (options.repeats < 1) throw ConfigError("cross validation needs at least 1 repeat");
  if (design.rows() < options.folds) {
    throw ConfigError("cross validation: " + std::to_string(design.rows()) +
                      " observations are fewer than " + std::to_string(options.folds) + " folds");
  }
  check_finite(design);
  LambdaChoice choice;
  choice.grid = lambda_grid(lambda_max(design), options.grid_points, options.grid_ratio);
  choice.winner_index.resize(options.repeats);
  choice.per_repeat.resize(options.repeats);
  parallel_for(options.repeats, options.threads, [&](std::size_t r) {
    Rng rng(derive_seed(options.seed, r));
    const auto folds = random_fold_assignment(design.rows(), options.folds, rng);
    const auto winner = cv_select(design, choice.grid, folds, options.folds, options.solver);
    choice.winner_index[r] = winner;
    choice.per_repeat[r] = choice.grid[winner];
  });
  // Offsets from the first winner keep the mean exact when all winners agree.
  const double first = choice.per_repeat.front();
  double offset = 0.0;
  for (const double v : choice.per_repeat) offset += v - first;
  choice.lambda = first + offset / static_cast<double>(options.repeats);
  return choice;
}

TopicSelection compute_fve(const RegressionFit& fit, const Design& design, const PeakSet& peaks,
                           double threshold) {
  TopicSelection selection;
  selection.topic_ids = fit.topic_ids;
  selection.threshold = threshold;
  selection.contribution.assign(design.cols(), 0.0);
  selection.fve.assign(design.cols(), 0.0);
  for (const Date d : peaks.peaks) {
    const auto t = require_row(design, d);
    for (std::size_t k = 0; k < design.cols(); ++k) {
      selection.contribution[k] += fit.weights[k] * design.at(t, k);
    }
  }
  const double total =
      std::accumulate(selection.contribution.begin(), selection.contribution.end(), 0.0);
  if (!(total > 0.0)) {
    selection.degenerate = true;
    spdlog::warn("no positive news-driven volume on peak days; every FVE is zero");
    return selection;
  }
  for (std::size_t k = 0; k < design.cols(); ++k) {
    selection.fve[k] = selection.contribution[k] / total;
    if (selection.fve[k] > threshold) selection.selected.push_back(fit.topic_ids[k]);
  }
  return selection;
}

EvaluationReport compute_fpe(const RegressionFit& fit, const Design& design, const PeakSet& peaks,
                             double ratio) {
  if (peaks.peaks.empty()) throw DataError("fpe: there are no peak days");
  EvaluationReport report;
  report.total_peaks = peaks.peaks.size();
  for (const Date d : peaks.peaks) {
    const auto t = require_row(design, d);
    const double predicted = news_part(fit, design, t);
    const double observed = design.y[t] - fit.intercept;
    bool explained;
    if (observed <= 0.0) {
      ++report.degenerate_peaks;
      spdlog::debug("peak {} lies at or below the regression constant", d.iso());
      explained = predicted >= 0.0;
    } else {
      explained = predicted >= ratio * observed;
    }
    if (explained) report.explained_peaks.push_back(d);
  }
  if (report.degenerate_peaks > 0) {
    spdlog::info("{} peak day(s) at or below the regression constant", report.degenerate_peaks);
  }
  report.fpe = static_cast<double>(report.explained_peaks.size()) /
               static_cast<double>(report.total_peaks);
  return report;
}

RegressionFit restrict_to(const RegressionFit& fit, const Design& design, std::span<const int> keep) {
  RegressionFit out = fit;
  for (std::size_t k = 0; k < out.topic_ids.size(); ++k) {
    if (std::find(keep.begin(), keep.end(), out.topic_ids[k]) == keep.end()) out.weights[k] = 0.0;
  }
  out.residuals = compute_residuals(design, out.weights, out.intercept);
  return out;
}

void write_fit_json(const RegressionFit& fit, const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["topic_ids"] = fit.topic_ids;
  j["weights"] = fit.weights;
  j["intercept"] = fit.intercept;
  j["lambda"] = fit.lambda;
  j["cv_trace"] = fit.cv_trace;
  j["sweeps"] = fit.sweeps;
  j["converged"] = fit.converged;
  j["zero_variance_topics"] = fit.zero_variance_topics;
  auto out = open_output(path);
  out << j.dump(2) << '\n';
  if (!out) throw Error("write failed: " + path.string());
}

RegressionFit read_fit_json(const std::filesystem::path& path, const Design& design) {
  auto in = open_input(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  RegressionFit fit;
  try {
    fit.topic_ids = j.at("topic_ids").get<std::vector<int>>();
    fit.weights = j.at("weights").get<std::vector<double>>();
    fit.intercept = j.at("intercept").get<double>();
    fit.lambda = j.at("lambda").get<double>();
    fit.cv_trace = j.value("cv_trace", std::vector<double>{});
    fit.sweeps = j.value("sweeps", std::size_t{0});
    fit.converged = j.value("converged", false);
    fit.zero_variance_topics = j.value("zero_variance_topics", std::vector<int>{});
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  if (fit.topic_ids != design.topic_ids || fit.weights.size() != design.cols()) {
    throw DataError(path.string() + ": fit topics do not match the design");
  }
  fit.residuals = compute_residuals(design, fit.weights, fit.intercept);
  return fit;
}

}  // namespace newsflow
