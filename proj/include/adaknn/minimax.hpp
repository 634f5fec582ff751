#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "adaknn/core.hpp"
#include "adaknn/worlds.hpp"

namespace adaknn {

// Machinery behind the minimax lower-bound construction: r-nets over a
// support sample, tent functions alternating in sign across net cells, the
// Bayes error of recovering a cell's sign under unit-variance Gaussian noise,
// and an empirical rate-floor probe. The probe estimates the bound's value,
// it is not itself a bound on all estimators.

struct Net {
  std::vector<Point> centers;
  double radius = 0.0;
};

// First-fit greedy: scan points in input order, admit a point as a center
// iff it is >= r away from every admitted center. Packing (pairwise >= r)
// and covering (every input point within r of some center) hold exactly.
inline Net greedy_net(const std::vector<Point>& points, double r, const Metric& metric = {}) {
  if (!(r > 0.0)) throw std::invalid_argument("greedy_net: radius must be > 0");
  Net net;
  net.radius = r;
  for (const Point& p : points) {
    bool admit = true;
    for (const Point& z : net.centers) {
      if (metric_dist(metric, p, z) < r) {
        admit = false;
        break;
      }
    }
    if (admit) net.centers.push_back(p);
  }
  return net;
}

// Tent function (lambda/5) * (tau * r_n - rho(x, z))_+ ; (lambda/5)-Lipschitz,
// supported on B(z, tau * r_n).
inline double tent_value(const Point& z, double tau, double r_n, double lambda,
                         std::span<const double> x, const Metric& metric = {}) {
  if (!(tau > 0.0) || !(r_n > 0.0) || !(lambda > 0.0))
    throw std::invalid_argument("tent_value: tau, r_n, lambda must be > 0");
  const double slack = tau * r_n - metric_dist(metric, x, z);
  return slack > 0.0 ? lambda / 5.0 * slack : 0.0;
}

struct AlternatingTarget {
  Net net;
  std::vector<int> signs;  // +-1 per center
  double lambda = 1.0;
  double tau = 0.25;
  double r_n = 0.0;
};

inline AlternatingTarget make_alternating_target(Net net, double lambda, double tau,
                                                 std::mt19937_64& rng) {
  AlternatingTarget t;
  t.lambda = lambda;
  t.tau = tau;
  t.r_n = net.radius;
  t.signs.reserve(net.centers.size());
  for (std::size_t i = 0; i < net.centers.size(); ++i)
    t.signs.push_back(uniform01(rng) < 0.5 ? -1 : 1);
  t.net = std::move(net);
  return t;
}

// Sum of signed tents. Tents are pairwise disjoint (packing plus tau <= 1/4),
// so at most one term is nonzero: the cell of the nearest center.
inline double eval_alternating(const AlternatingTarget& target, std::span<const double> x,
                               const Metric& metric = {}) {
  const double reach = target.tau * target.r_n;
  for (std::size_t i = 0; i < target.net.centers.size(); ++i) {
    const double d = metric_dist(metric, x, target.net.centers[i]);
    if (d < reach)
      return target.signs[i] * (target.lambda / 5.0) * (reach - d);
  }
  return 0.0;
}

// Standard normal CDF, absolute accuracy well below 1e-7.
inline double std_normal_cdf(double t) {
  return 0.5 * std::erfc(-t / std::numbers::sqrt2);
}

// Bayes error of recovering the cell's sign from the labels of the sample
// points falling in the cell, under Y = f(X) + N(0,1): Phi(-||u||) with
// u = (f_z(x_(1)), ..., f_z(x_(m))).
inline double cell_flip_error(const AlternatingTarget& target, std::size_t z_index,
                              std::span<const Point> cell_points, const Metric& metric = {}) {
  if (z_index >= target.net.centers.size())
    throw std::invalid_argument("cell_flip_error: center index out of range");
  const Point& z = target.net.centers[z_index];
  double norm_sq = 0.0;
  for (const Point& p : cell_points) {
    const double v = tent_value(z, target.tau, target.r_n, target.lambda, p, metric);
    norm_sq += v * v;
  }
  return std_normal_cdf(-std::sqrt(norm_sq));
}

//-----------------------------------------------------------------------------
// Rate-floor probe
//-----------------------------------------------------------------------------

struct RateFloorPoint {
  std::size_t n = 0;
  double floor_estimate = 0.0;
  std::size_t net_size = 0;
  double r_n = 0.0;
  bool degenerate = false;  // |Z| < 2, excluded from slope fits
};

struct RateFloorProbe {
  std::vector<RateFloorPoint> points;
  double scale_factor = 1.0;  // applied to bring the support to diameter <= 1
  double tau = 0.25;
  double c1_estimate = 1.0;
};

namespace detail {

// Lower homogeneity constant from empirical mass ratios at epsilon = 1/2:
// C1 ~= inf mu(B(x,r)) * eps^d / mu(B(x, eps r)).
inline double estimate_c1(const std::vector<Point>& support, int d, const Metric& metric) {
  const std::size_t m = support.size();
  const std::size_t centers = std::min<std::size_t>(16, m);
  double c1 = 1.0;
  double span = 0.0;
  {
    const Point& a = support[0];
    for (const Point& p : support) span = std::max(span, metric_dist(metric, a, p));
  }
  for (std::size_t c = 0; c < centers; ++c) {
    const Point& x = support[c * (m / centers)];
    for (double r = 0.05 * span; r <= 0.4 * span; r *= 2.0) {
      std::size_t outer = 0, inner = 0;
      for (const Point& p : support) {
        const double dist = metric_dist(metric, x, p);
        if (dist <= r) ++outer;
        if (dist <= 0.5 * r) ++inner;
      }
      if (inner == 0 || outer == 0) continue;
      const double ratio = (static_cast<double>(outer) / inner) * std::pow(0.5, d);
      c1 = std::min(c1, ratio);
    }
  }
  return std::max(c1, 1e-6);
}

}  // namespace detail

// For each n: build an r_n-net of a large support sample (r_n = (lambda^2
// n)^(-1/(2+d)) after rescaling to diameter <= 1), draw an n-sample, and sum
// cell_flip_error * ||f_z||^2 contributions into an L2(mu) risk-floor
// estimate. ||f_z||^2 is estimated from the support sample's empirical mass.
inline RateFloorProbe minimax_rate_probe(const WorldSpec& spec, double lambda,
                                         const std::vector<std::size_t>& n_grid, int reps,
                                         std::uint64_t seed, std::size_t support_size = 4096) {
  validate_world(spec);
  if (!(lambda > 0.0)) throw std::invalid_argument("minimax_rate_probe: lambda must be > 0");
  if (reps < 1) throw std::invalid_argument("minimax_rate_probe: reps must be >= 1");
  for (std::size_t i = 1; i < n_grid.size(); ++i)
    if (n_grid[i] <= n_grid[i - 1])
      throw std::invalid_argument("minimax_rate_probe: n_grid must be sorted ascending");

  const Metric metric{};
  const int d = spec.kind == WorldKind::curve_in_ambient ? 1 : spec.d;

  auto support_rng = make_rng(mix_seed(seed, 0x737570ULL));
  std::vector<Point> support = sample_points(spec, support_size, support_rng);

  // rescale to diameter <= 1 via the bounding-box diagonal
  const std::size_t dim = support.front().size();
  std::vector<double> lo(dim, std::numeric_limits<double>::infinity());
  std::vector<double> hi(dim, -std::numeric_limits<double>::infinity());
  for (const Point& p : support)
    for (std::size_t j = 0; j < dim; ++j) {
      lo[j] = std::min(lo[j], p[j]);
      hi[j] = std::max(hi[j], p[j]);
    }
  double diag_sq = 0.0;
  for (std::size_t j = 0; j < dim; ++j) diag_sq += (hi[j] - lo[j]) * (hi[j] - lo[j]);
  const double diag = std::sqrt(diag_sq);

  RateFloorProbe probe;
  probe.scale_factor = diag > 1.0 ? 1.0 / diag : 1.0;
  if (probe.scale_factor != 1.0)
    for (Point& p : support)
      for (double& v : p) v *= probe.scale_factor;

  probe.c1_estimate = detail::estimate_c1(support, d, metric);
  probe.tau = std::max(
      std::min(std::pow(probe.c1_estimate, 1.0 / d) / 3.0, 0.25), 1e-3);

  for (std::size_t n : n_grid) {
    const double r_n = std::pow(lambda * lambda * static_cast<double>(n), -1.0 / (2.0 + d));
    RateFloorPoint pt;
    pt.n = n;
    pt.r_n = r_n;

    const Net net = greedy_net(support, r_n, metric);
    pt.net_size = net.centers.size();
    if (net.centers.size() < 2) {
      pt.degenerate = true;
      probe.points.push_back(pt);
      continue;
    }

    // ||f_z||^2 ~= mean over the support sample of f_z^2
    std::vector<double> fz_norm_sq(net.centers.size(), 0.0);
    {
      AlternatingTarget shape;  // signs irrelevant for norms and flip errors
      shape.net = net;
      shape.lambda = lambda;
      shape.tau = probe.tau;
      shape.r_n = r_n;
      shape.signs.assign(net.centers.size(), 1);
      for (const Point& p : support)
        for (std::size_t z = 0; z < net.centers.size(); ++z) {
          const double v = tent_value(net.centers[z], probe.tau, r_n, lambda, p, metric);
          if (v > 0.0) {
            fz_norm_sq[z] += v * v;
            break;  // tents are disjoint
          }
        }
      for (double& v : fz_norm_sq) v /= static_cast<double>(support.size());

      double floor_sum = 0.0;
      for (int rep = 0; rep < reps; ++rep) {
        auto rng = make_rng(mix_seed(seed, n, static_cast<std::uint64_t>(rep)));
        std::vector<Point> sample = sample_points(spec, n, rng);
        if (probe.scale_factor != 1.0)
          for (Point& p : sample)
            for (double& v : p) v *= probe.scale_factor;
        std::vector<double> cell_norm_sq(net.centers.size(), 0.0);
        for (const Point& p : sample)
          for (std::size_t z = 0; z < net.centers.size(); ++z) {
            const double v = tent_value(net.centers[z], probe.tau, r_n, lambda, p, metric);
            if (v > 0.0) {
              cell_norm_sq[z] += v * v;
              break;
            }
          }
        double floor = 0.0;
        for (std::size_t z = 0; z < net.centers.size(); ++z)
          floor += std_normal_cdf(-std::sqrt(cell_norm_sq[z])) * fz_norm_sq[z];
        floor_sum += floor;
      }
      pt.floor_estimate = floor_sum / reps;
    }
    probe.points.push_back(pt);
  }
  return probe;
}

// Build nets of a reference ball at radii eps * r0 and fit the slope of
// log |Z| against log(1/eps); on a d-homogeneous world the slope is ~ d.
inline double net_size_scaling(const WorldSpec& spec, const Dataset& support_sample,
                               std::span<const double> eps_grid) {
  validate_world(spec);
  if (eps_grid.size() < 2)
    throw std::invalid_argument("net_size_scaling: need at least 2 grid points");
  for (double e : eps_grid)
    if (!(e > 0.0 && e <= 1.0))
      throw std::invalid_argument("net_size_scaling: eps must lie in (0,1]");

  const Metric metric = support_sample.metric();
  const std::size_t m = support_sample.n();

  // reference ball: centered on the point closest to the coordinate mean
  Point centroid(support_sample.dim(), 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const auto p = support_sample.point(i);
    for (std::size_t j = 0; j < centroid.size(); ++j) centroid[j] += p[j];
  }
  for (double& v : centroid) v /= static_cast<double>(m);
  std::size_t center_idx = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < m; ++i) {
    const double dc = metric_dist(metric, centroid, support_sample.point(i));
    if (dc < best) {
      best = dc;
      center_idx = i;
    }
  }
  const Point center(support_sample.point(center_idx).begin(),
                     support_sample.point(center_idx).end());
  double max_dist = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    max_dist = std::max(max_dist, metric_dist(metric, center, support_sample.point(i)));
  const double r0 = 0.5 * max_dist;
  if (r0 <= 0.0) return 0.0;  // single-point support: |Z| = 1 at every eps

  std::vector<Point> in_ball;
  for (std::size_t i = 0; i < m; ++i)
    if (metric_dist(metric, center, support_sample.point(i)) <= r0)
      in_ball.emplace_back(support_sample.point(i).begin(), support_sample.point(i).end());

  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::size_t used = 0;
  for (double e : eps_grid) {
    const double radius = e * r0;
    if (!(radius > 0.0)) continue;
    const Net net = greedy_net(in_ball, radius, metric);
    if (net.centers.empty()) continue;
    const double x = std::log(1.0 / e);
    const double y = std::log(static_cast<double>(net.centers.size()));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++used;
  }
  if (used < 2) throw std::invalid_argument("net_size_scaling: fewer than 2 usable grid points");
  const double denom = sxx - sx * sx / used;
  if (denom <= 0.0) return 0.0;  // all radii equal; no scaling information
  return (sxy - sx * sy / used) / denom;
}

}  // namespace adaknn
