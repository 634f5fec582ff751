#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "adaknn/adaptive.hpp"
#include "adaknn/core.hpp"
#include "adaknn/csv.hpp"
#include "adaknn/nn_index.hpp"
#include "adaknn/regressor.hpp"
#include "adaknn/worlds.hpp"

namespace adaknn {

enum class DeltaCapPolicy { profile_max, diameter };
enum class AggPolicy { mean, median_of_means };

struct ExperimentConfig {
  WorldSpec world;
  TargetKind target_kind = TargetKind::zigzag;
  double lambda = 1.0;
  NoiseModel noise = NoiseModel::gaussian(0.2);
  std::vector<std::size_t> n_grid;
  int reps = 1;
  int queries = 100;
  Kernel kernel = Kernel::box();
  bool adaptive = true;
  int fixed_k = 1;
  double delta = 0.05;
  std::optional<double> theta_override;  // nullopt: theta = ln^2(n/delta)
  DeltaCapPolicy cap_policy = DeltaCapPolicy::profile_max;
  AggPolicy agg = AggPolicy::mean;
  std::uint64_t seed = 0;
  int zigzag_levels = 6;
  double zigzag_base_period = 1.6;
};

struct RatePoint {
  std::size_t n = 0;
  double mse = 0.0;
  double mse_stderr = 0.0;
  double mean_k = 0.0;
};

struct RateReport {
  std::vector<RatePoint> points;
  std::optional<double> slope;
  double slope_halfwidth = 0.0;
  std::string status = "ok";
};

// OLS fit of ln(mse) against ln(n); returns {slope, half-width}, the latter
// 1.96 standard errors of the slope.
inline std::pair<double, double> fit_loglog_slope(
    const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 2)
    throw std::invalid_argument("fit_loglog_slope: need at least 2 points");
  for (const auto& [n, mse] : points)
    if (!(mse > 0.0) || !(n > 0.0))
      throw std::invalid_argument("fit_loglog_slope: points must be positive");

  const double m = static_cast<double>(points.size());
  double sx = 0.0, sy = 0.0;
  for (const auto& [n, mse] : points) {
    sx += std::log(n);
    sy += std::log(mse);
  }
  const double mx = sx / m, my = sy / m;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [n, mse] : points) {
    const double dx = std::log(n) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(mse) - my);
  }
  if (sxx <= 0.0) throw std::invalid_argument("fit_loglog_slope: degenerate abscissae");
  const double slope = sxy / sxx;

  double half_width = 0.0;
  if (points.size() > 2) {
    const double intercept = my - slope * mx;
    double rss = 0.0;
    for (const auto& [n, mse] : points) {
      const double resid = std::log(mse) - (intercept + slope * std::log(n));
      rss += resid * resid;
    }
    const double se = std::sqrt(rss / (m - 2.0) / sxx);
    half_width = 1.96 * se;
  }
  return {slope, half_width};
}

inline TargetFunction make_experiment_target(const ExperimentConfig& cfg) {
  return make_world_target(cfg.world, cfg.target_kind, cfg.lambda, cfg.zigzag_levels,
                           cfg.zigzag_base_period);
}

namespace detail {

struct CellStats {
  double sum = 0.0, sum_sq = 0.0;
  std::size_t count = 0;
  void add(double v) {
    sum += v;
    sum_sq += v * v;
    ++count;
  }
  double mean() const { return count ? sum / static_cast<double>(count) : 0.0; }
  double stderr_of_mean() const {
    if (count < 2) return 0.0;
    const double m = mean();
    const double var = (sum_sq - static_cast<double>(count) * m * m) /
                       static_cast<double>(count - 1);
    return std::sqrt(std::max(0.0, var) / static_cast<double>(count));
  }
};

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size();
  return m % 2 == 1 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

}  // namespace detail

inline void validate_config(const ExperimentConfig& cfg) {
  validate_world(cfg.world);
  if (cfg.n_grid.empty()) throw std::invalid_argument("experiment: empty n grid");
  for (std::size_t i = 1; i < cfg.n_grid.size(); ++i)
    if (cfg.n_grid[i] <= cfg.n_grid[i - 1])
      throw std::invalid_argument("experiment: n_grid must be sorted ascending");
  if (cfg.reps < 1) throw std::invalid_argument("experiment: reps must be >= 1");
  if (cfg.queries < 1) throw std::invalid_argument("experiment: queries must be >= 1");
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0))
    throw std::invalid_argument("experiment: delta must lie in (0,1)");
  if (!cfg.adaptive && cfg.fixed_k < 1)
    throw std::invalid_argument("experiment: fixed k must be >= 1");
}

// For each n and rep: draw a train set and fresh queries from the same world
// (train and query samples are separate draws, so no query index appears in
// its training sample), evaluate squared error at the queries, aggregate, and
// fit the log-log slope.
inline RateReport run_rate_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  const TargetFunction target = make_experiment_target(cfg);

  RateReport report;
  for (std::size_t n : cfg.n_grid) {
    detail::CellStats err_stats, k_stats;
    std::vector<double> rep_means;

    for (int rep = 0; rep < cfg.reps; ++rep) {
      auto train_rng = make_rng(mix_seed(cfg.seed, n, 2 * static_cast<std::uint64_t>(rep)));
      auto query_rng = make_rng(mix_seed(cfg.seed, n, 2 * static_cast<std::uint64_t>(rep) + 1));
      const Dataset train = sample_world(cfg.world, n, target, cfg.noise, train_rng);
      const std::vector<Point> queries =
          sample_points(cfg.world, static_cast<std::size_t>(cfg.queries), query_rng);
      const Index index(train);

      AdaptiveConfig acfg;
      acfg.delta = cfg.delta;
      acfg.theta = cfg.theta_override.value_or(default_theta(n, cfg.delta, cfg.noise));
      if (cfg.cap_policy == DeltaCapPolicy::diameter)
        acfg.delta_cap = world_diameter(cfg.world);

      detail::CellStats rep_stats;
      for (const Point& q : queries) {
        double prediction;
        double k_used;
        if (cfg.adaptive) {
          const AdaptivePrediction ap = predict_adaptive(index, q, cfg.kernel, acfg);
          prediction = ap.prediction.value;
          k_used = static_cast<double>(ap.selection.chosen);
        } else {
          const int k = std::min<int>(cfg.fixed_k, static_cast<int>(n));
          const Prediction p = predict_fixed_k(index, q, k, cfg.kernel);
          prediction = p.value;
          k_used = static_cast<double>(k);
        }
        const double err = prediction - target(q);
        err_stats.add(err * err);
        rep_stats.add(err * err);
        k_stats.add(k_used);
      }
      rep_means.push_back(rep_stats.mean());
    }

    RatePoint pt;
    pt.n = n;
    pt.mse = cfg.agg == AggPolicy::median_of_means ? detail::median(rep_means)
                                                   : err_stats.mean();
    pt.mse_stderr = err_stats.stderr_of_mean();
    pt.mean_k = k_stats.mean();
    report.points.push_back(pt);
  }

  bool all_positive = true;
  for (const RatePoint& pt : report.points)
    if (!(pt.mse > 0.0)) all_positive = false;
  if (!all_positive) {
    report.status = "degenerate: zero error";
  } else if (report.points.size() >= 2) {
    std::vector<std::pair<double, double>> pts;
    for (const RatePoint& pt : report.points)
      pts.emplace_back(static_cast<double>(pt.n), pt.mse);
    const auto [slope, half_width] = fit_loglog_slope(pts);
    report.slope = slope;
    report.slope_halfwidth = half_width;
  } else {
    report.status = "single grid point: no slope";
  }
  return report;
}

// MSE per k in {1, ..., k_max} at one sample size, sharing one distance
// profile per query across all k. Used for oracle fixed-k comparisons.
inline std::vector<double> fixed_k_mse_sweep(const ExperimentConfig& cfg, std::size_t n,
                                             int k_max) {
  validate_config(cfg);
  if (k_max < 1 || static_cast<std::size_t>(k_max) > n)
    throw std::invalid_argument("fixed_k_mse_sweep: k_max out of range");
  const TargetFunction target = make_experiment_target(cfg);

  std::vector<double> sum_sq(static_cast<std::size_t>(k_max), 0.0);
  std::size_t count = 0;
  for (int rep = 0; rep < cfg.reps; ++rep) {
    auto train_rng = make_rng(mix_seed(cfg.seed, n, 2 * static_cast<std::uint64_t>(rep)));
    auto query_rng = make_rng(mix_seed(cfg.seed, n, 2 * static_cast<std::uint64_t>(rep) + 1));
    const Dataset train = sample_world(cfg.world, n, target, cfg.noise, train_rng);
    const std::vector<Point> queries =
        sample_points(cfg.world, static_cast<std::size_t>(cfg.queries), query_rng);
    const Index index(train);
    for (const Point& q : queries) {
      const DistanceProfile profile = index.profile(q);
      const double truth = target(q);
      for (int k = 1; k <= k_max; ++k) {
        const Prediction p = predict_from_profile(profile, train, cfg.kernel, k);
        const double err = p.value - truth;
        sum_sq[static_cast<std::size_t>(k - 1)] += err * err;
      }
      ++count;
    }
  }
  for (double& v : sum_sq) v /= static_cast<double>(count);
  return sum_sq;
}

//-----------------------------------------------------------------------------
// Report emission
//-----------------------------------------------------------------------------

inline void write_rate_report_csv(const std::string& path, const RateReport& report) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("write_rate_report_csv: cannot open " + path);
  out << "n,mse,mse_stderr,mean_k\n";
  for (const RatePoint& pt : report.points)
    out << pt.n << "," << detail::format_double(pt.mse) << ","
        << detail::format_double(pt.mse_stderr) << "," << detail::format_double(pt.mean_k)
        << "\n";
  if (report.slope.has_value()) {
    out << "slope," << detail::format_double(*report.slope) << "\n";
    out << "slope_halfwidth," << detail::format_double(report.slope_halfwidth) << "\n";
  }
  out << "status," << report.status << "\n";
}

}  // namespace adaknn
