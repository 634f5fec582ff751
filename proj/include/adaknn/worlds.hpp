#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "adaknn/core.hpp"

namespace adaknn {

// Synthetic doubling-measure worlds with known intrinsic dimension d,
// embedded in ambient R^D. Intrinsic coordinates occupy the first axes
// (canonical embedding), optionally followed by a seeded random rotation.

enum class WorldKind {
  hyperplane_uniform,  // uniform on [0,1]^d x {0}^(D-d)
  sphere_surface,      // uniform on the unit sphere S^d in R^(d+1) x {0}^(D-d-1)
  curve_in_ambient,    // piecewise-linear serpentine, locally 1-dimensional
  sparse_support,      // uniform over floor(D/d) disjoint d-dimensional blocks
  mixture,             // finite mixture of the above
};

struct WorldSpec {
  WorldKind kind = WorldKind::hyperplane_uniform;
  int d = 1;
  int D = 1;
  std::uint64_t seed = 0;  // structural seed: rotation, target phases
  bool rotate = false;
  double curve_length = 8.0;  // L
  double curve_pitch = 0.1;   // w, fold scale
  std::vector<WorldSpec> components;
  std::vector<double> mixture_weights;
};

namespace detail {

inline int curve_rows(const WorldSpec& s) {
  const int rows = static_cast<int>(
      std::lround((s.curve_length + s.curve_pitch) / (1.0 + s.curve_pitch)));
  return std::max(2, rows);
}

struct CurveGeometry {
  // serpentine in the first two intrinsic axes: horizontal unit runs at
  // heights 0, w, 2w, ... joined by vertical connectors of length w
  int rows;
  double pitch;
  double total_length;

  explicit CurveGeometry(const WorldSpec& s) : rows(curve_rows(s)), pitch(s.curve_pitch) {
    total_length = rows * 1.0 + (rows - 1) * pitch;
  }

  double vertical_span() const { return (rows - 1) * pitch; }

  // arc-length position t in [0, total_length) -> 2-d point
  std::pair<double, double> at(double t) const {
    const double cell = 1.0 + pitch;  // one run plus one connector
    int row = static_cast<int>(t / cell);
    if (row > rows - 1) row = rows - 1;
    double local = t - row * cell;
    const bool forward = row % 2 == 0;
    if (local <= 1.0) {
      const double x = forward ? local : 1.0 - local;
      return {x, row * pitch};
    }
    const double up = local - 1.0;
    return {forward ? 1.0 : 0.0, row * pitch + up};
  }
};

}  // namespace detail

inline void validate_world(const WorldSpec& s) {
  if (s.D < 1) throw std::invalid_argument("WorldSpec: D must be >= 1");
  switch (s.kind) {
    case WorldKind::hyperplane_uniform:
      if (s.d < 1 || s.d > s.D)
        throw std::invalid_argument("WorldSpec: need 1 <= d <= D for hyperplane-uniform");
      break;
    case WorldKind::sphere_surface:
      if (s.d < 1 || s.d + 1 > s.D)
        throw std::invalid_argument("WorldSpec: need d+1 <= D for sphere-surface");
      break;
    case WorldKind::curve_in_ambient: {
      if (s.D < 2) throw std::invalid_argument("WorldSpec: curve needs D >= 2");
      if (!(s.curve_pitch > 0.0 && s.curve_pitch <= 0.5))
        throw std::invalid_argument("WorldSpec: curve pitch must lie in (0, 0.5]");
      if (!(s.curve_length >= 2.0))
        throw std::invalid_argument("WorldSpec: curve length must be >= 2");
      const detail::CurveGeometry geom(s);
      if (geom.vertical_span() > 1.0 + 1e-9)
        throw std::invalid_argument("WorldSpec: curve folds exceed the unit cube");
      break;
    }
    case WorldKind::sparse_support:
      if (s.d < 1 || s.d > s.D)
        throw std::invalid_argument("WorldSpec: need 1 <= d <= D for sparse-support");
      break;
    case WorldKind::mixture: {
      if (s.components.empty())
        throw std::invalid_argument("WorldSpec: mixture needs components");
      if (s.components.size() != s.mixture_weights.size())
        throw std::invalid_argument("WorldSpec: mixture weights/components mismatch");
      double total = 0.0;
      for (double w : s.mixture_weights) {
        if (!(w >= 0.0)) throw std::invalid_argument("WorldSpec: negative mixture weight");
        total += w;
      }
      if (std::abs(total - 1.0) > 1e-9)
        throw std::invalid_argument("WorldSpec: mixture weights must sum to 1");
      for (const WorldSpec& c : s.components) {
        if (c.kind == WorldKind::mixture)
          throw std::invalid_argument("WorldSpec: nested mixtures not supported");
        if (c.D != s.D)
          throw std::invalid_argument("WorldSpec: mixture components must share D");
        validate_world(c);
      }
      break;
    }
  }
}

//-----------------------------------------------------------------------------
// Rotation
//-----------------------------------------------------------------------------

class Rotation {
 public:
  // identity
  Rotation() = default;

  static Rotation random(int dim, std::uint64_t seed) {
    Rotation rot;
    rot.dim_ = dim;
    rot.q_.assign(static_cast<std::size_t>(dim) * dim, 0.0);
    auto rng = make_rng(mix_seed(seed, 0x726f74ULL));
    // Gram-Schmidt on Gaussian columns
    for (int c = 0; c < dim; ++c) {
      std::vector<double> v(static_cast<std::size_t>(dim));
      double norm = 0.0;
      while (norm < 1e-8) {
        for (int i = 0; i < dim; ++i) v[static_cast<std::size_t>(i)] = standard_normal(rng);
        for (int pc = 0; pc < c; ++pc) {
          double dot = 0.0;
          for (int i = 0; i < dim; ++i) dot += v[static_cast<std::size_t>(i)] * rot.col(i, pc);
          for (int i = 0; i < dim; ++i) v[static_cast<std::size_t>(i)] -= dot * rot.col(i, pc);
        }
        norm = 0.0;
        for (double x : v) norm += x * x;
        norm = std::sqrt(norm);
      }
      for (int i = 0; i < dim; ++i) rot.q_[rot.idx(i, c)] = v[static_cast<std::size_t>(i)] / norm;
    }
    return rot;
  }

  bool identity() const { return q_.empty(); }

  Point apply(std::span<const double> x) const {
    if (identity()) return Point(x.begin(), x.end());
    Point y(static_cast<std::size_t>(dim_), 0.0);
    for (int i = 0; i < dim_; ++i)
      for (int j = 0; j < dim_; ++j) y[static_cast<std::size_t>(i)] += col(i, j) * x[static_cast<std::size_t>(j)];
    return y;
  }

  Point apply_inverse(std::span<const double> y) const {
    if (identity()) return Point(y.begin(), y.end());
    Point x(static_cast<std::size_t>(dim_), 0.0);
    for (int j = 0; j < dim_; ++j)
      for (int i = 0; i < dim_; ++i) x[static_cast<std::size_t>(j)] += col(i, j) * y[static_cast<std::size_t>(i)];
    return x;
  }

 private:
  std::size_t idx(int r, int c) const {
    return static_cast<std::size_t>(r) * static_cast<std::size_t>(dim_) +
           static_cast<std::size_t>(c);
  }
  double col(int r, int c) const { return q_[idx(r, c)]; }

  int dim_ = 0;
  std::vector<double> q_;  // row-major, columns orthonormal
};

inline Rotation world_rotation(const WorldSpec& s) {
  return s.rotate ? Rotation::random(s.D, s.seed) : Rotation();
}

//-----------------------------------------------------------------------------
// Sampling
//-----------------------------------------------------------------------------

namespace detail {

inline Point sample_point_unrotated(const WorldSpec& s, std::mt19937_64& rng) {
  Point p(static_cast<std::size_t>(s.D), 0.0);
  switch (s.kind) {
    case WorldKind::hyperplane_uniform:
      for (int j = 0; j < s.d; ++j) p[static_cast<std::size_t>(j)] = uniform01(rng);
      break;
    case WorldKind::sphere_surface: {
      double norm = 0.0;
      while (norm < 1e-12) {
        norm = 0.0;
        for (int j = 0; j <= s.d; ++j) {
          p[static_cast<std::size_t>(j)] = standard_normal(rng);
          norm += p[static_cast<std::size_t>(j)] * p[static_cast<std::size_t>(j)];
        }
        norm = std::sqrt(norm);
      }
      for (int j = 0; j <= s.d; ++j) p[static_cast<std::size_t>(j)] /= norm;
      break;
    }
    case WorldKind::curve_in_ambient: {
      const CurveGeometry geom(s);
      const double t = uniform01(rng) * geom.total_length;
      const auto [cx, cy] = geom.at(t);
      p[0] = cx;
      p[1] = cy;
      break;
    }
    case WorldKind::sparse_support: {
      const int blocks = s.D / s.d;
      const int b = std::min<int>(blocks - 1, static_cast<int>(uniform01(rng) * blocks));
      for (int j = 0; j < s.d; ++j)
        p[static_cast<std::size_t>(b * s.d + j)] = uniform01(rng);
      break;
    }
    case WorldKind::mixture: {
      double u = uniform01(rng);
      std::size_t pick = s.components.size() - 1;
      for (std::size_t c = 0; c < s.components.size(); ++c) {
        if (u < s.mixture_weights[c]) {
          pick = c;
          break;
        }
        u -= s.mixture_weights[c];
      }
      return sample_point_unrotated(s.components[pick], rng);
    }
  }
  return p;
}

}  // namespace detail

inline std::vector<Point> sample_points(const WorldSpec& spec, std::size_t n,
                                        std::mt19937_64& rng) {
  validate_world(spec);
  const Rotation rot = world_rotation(spec);
  std::vector<Point> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Point p = detail::sample_point_unrotated(spec, rng);
    out.push_back(rot.identity() ? std::move(p) : rot.apply(p));
  }
  return out;
}

inline Dataset sample_world(const WorldSpec& spec, std::size_t n, const TargetFunction& target,
                            const NoiseModel& noise, std::mt19937_64& rng) {
  if (n < 1) throw std::invalid_argument("sample_world: n must be >= 1");
  std::vector<Point> pts = sample_points(spec, n, rng);
  std::vector<double> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = draw_label(noise, target(pts[i]), rng);
  return Dataset::from_points(pts, std::move(labels));
}

//-----------------------------------------------------------------------------
// Intrinsic coordinates (hyperplane and sphere kinds)
//-----------------------------------------------------------------------------

inline std::vector<double> intrinsic_coordinates(const WorldSpec& spec,
                                                 std::span<const double> p) {
  validate_world(spec);
  const Point u = world_rotation(spec).apply_inverse(p);
  switch (spec.kind) {
    case WorldKind::hyperplane_uniform:
      return {u.begin(), u.begin() + spec.d};
    case WorldKind::sphere_surface:
      return {u.begin(), u.begin() + spec.d + 1};
    default:
      throw std::invalid_argument("intrinsic_coordinates: unsupported world kind");
  }
}

inline Point embed_intrinsic(const WorldSpec& spec, std::span<const double> intrinsic) {
  Point p(static_cast<std::size_t>(spec.D), 0.0);
  for (std::size_t j = 0; j < intrinsic.size(); ++j) p[j] = intrinsic[j];
  return world_rotation(spec).apply(p);
}

// Upper bound on the support diameter; exact for hyperplane and sphere.
inline double world_diameter(const WorldSpec& spec) {
  switch (spec.kind) {
    case WorldKind::hyperplane_uniform: return std::sqrt(static_cast<double>(spec.d));
    case WorldKind::sphere_surface: return 2.0;
    case WorldKind::curve_in_ambient: {
      const detail::CurveGeometry geom(spec);
      return std::sqrt(1.0 + geom.vertical_span() * geom.vertical_span());
    }
    case WorldKind::sparse_support: return std::sqrt(2.0 * spec.d);
    case WorldKind::mixture: return 2.0 * std::sqrt(static_cast<double>(spec.D));
  }
  return 0.0;
}

//-----------------------------------------------------------------------------
// Analytic ball masses
//-----------------------------------------------------------------------------

namespace detail {

// area of {x in [0,a], y in [0,b], x^2+y^2 <= r^2}, a,b >= 0
inline double quarter_disk_clipped(double a, double b, double r) {
  if (r <= 0.0 || a <= 0.0 || b <= 0.0) return 0.0;
  a = std::min(a, r);
  b = std::min(b, r);
  if (a * a + b * b <= r * r) return a * b;
  const double xstar = std::sqrt(std::max(0.0, r * r - b * b));
  auto antider = [&](double x) {
    const double c = std::clamp(x / r, -1.0, 1.0);
    return 0.5 * (x * std::sqrt(std::max(0.0, r * r - x * x)) + r * r * std::asin(c));
  };
  return b * xstar + antider(a) - antider(xstar);
}

inline double unit_ball_volume(int d) {
  return std::pow(std::numbers::pi, d / 2.0) / std::tgamma(d / 2.0 + 1.0);
}

// Normalized area of a spherical cap on S^d with polar angle phi in [0, pi].
inline double sphere_cap_fraction(int d, double phi) {
  phi = std::clamp(phi, 0.0, std::numbers::pi);
  if (d == 1) return phi / std::numbers::pi;
  if (d == 2) return 0.5 * (1.0 - std::cos(phi));
  // integrate sin^(d-1); Simpson on a fine fixed grid is effectively exact
  auto integral = [&](double upper) {
    const int steps = 4096;  // even
    const double h = upper / steps;
    double acc = 0.0;
    for (int i = 0; i <= steps; ++i) {
      const double wgt = (i == 0 || i == steps) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
      acc += wgt * std::pow(std::sin(i * h), d - 1);
    }
    return acc * h / 3.0;
  };
  return integral(phi) / integral(std::numbers::pi);
}

}  // namespace detail

// Analytic mu(B(x, r)) where available; x must lie on the support.
inline std::optional<double> true_ball_mass(const WorldSpec& spec, std::span<const double> x,
                                            double r) {
  validate_world(spec);
  if (r < 0.0) throw std::invalid_argument("true_ball_mass: negative radius");
  const Point u = world_rotation(spec).apply_inverse(x);

  switch (spec.kind) {
    case WorldKind::hyperplane_uniform: {
      for (int j = 0; j < spec.d; ++j)
        if (u[static_cast<std::size_t>(j)] < -1e-9 || u[static_cast<std::size_t>(j)] > 1.0 + 1e-9)
          throw std::invalid_argument("true_ball_mass: point off the support");
      for (int j = spec.d; j < spec.D; ++j)
        if (std::abs(u[static_cast<std::size_t>(j)]) > 1e-9)
          throw std::invalid_argument("true_ball_mass: point off the support");
      if (spec.d == 1) {
        const double c = u[0];
        return std::min(c + r, 1.0) - std::max(c - r, 0.0);
      }
      if (spec.d == 2) {
        const double cx = u[0], cy = u[1];
        return detail::quarter_disk_clipped(cx, cy, r) +
               detail::quarter_disk_clipped(1.0 - cx, cy, r) +
               detail::quarter_disk_clipped(cx, 1.0 - cy, r) +
               detail::quarter_disk_clipped(1.0 - cx, 1.0 - cy, r);
      }
      // d >= 3: closed forms only for the interior and the full-mass cases
      double corner_sq = 0.0;
      bool interior = true;
      for (int j = 0; j < spec.d; ++j) {
        const double c = u[static_cast<std::size_t>(j)];
        const double far = std::max(c, 1.0 - c);
        corner_sq += far * far;
        if (c < r || c > 1.0 - r) interior = false;
      }
      if (r * r >= corner_sq) return 1.0;
      if (interior) return detail::unit_ball_volume(spec.d) * std::pow(r, spec.d);
      return std::nullopt;
    }
    case WorldKind::sphere_surface: {
      double norm = 0.0;
      for (int j = 0; j <= spec.d; ++j)
        norm += u[static_cast<std::size_t>(j)] * u[static_cast<std::size_t>(j)];
      if (std::abs(std::sqrt(norm) - 1.0) > 1e-6)
        throw std::invalid_argument("true_ball_mass: point off the sphere");
      for (int j = spec.d + 1; j < spec.D; ++j)
        if (std::abs(u[static_cast<std::size_t>(j)]) > 1e-6)
          throw std::invalid_argument("true_ball_mass: point off the sphere");
      if (r >= 2.0) return 1.0;
      // chordal radius r corresponds to polar angle 2*asin(r/2)
      const double phi = 2.0 * std::asin(std::clamp(r / 2.0, 0.0, 1.0));
      return detail::sphere_cap_fraction(spec.d, phi);
    }
    default:
      return std::nullopt;  // no analytic mass for this kind
  }
}

//-----------------------------------------------------------------------------
// Local dimension estimation
//-----------------------------------------------------------------------------

struct MassPair {
  double eps = 0.0;
  double inner_mass = 0.0;  // mu_n(B(x, eps*r))
  double outer_mass = 0.0;  // mu_n(B(x, r))
};

struct HomogeneityEstimate {
  double d_hat = 0.0;
  std::vector<MassPair> mass_pairs;
};

// Least-squares slope of log empirical mass against log radius over the
// epsilon grid. Returns nothing when the estimate is undefined (zero radius
// or fewer than two radii with nonzero empirical mass).
inline std::optional<HomogeneityEstimate> estimate_local_dimension(
    const Dataset& data, std::span<const double> x, double r,
    std::span<const double> eps_grid) {
  if (eps_grid.empty())
    throw std::invalid_argument("estimate_local_dimension: empty epsilon grid");
  for (double e : eps_grid)
    if (!(e > 0.0 && e < 1.0))
      throw std::invalid_argument("estimate_local_dimension: eps must lie in (0,1)");
  if (!(r > 0.0)) return std::nullopt;

  const std::size_t n = data.n();
  auto empirical_mass = [&](double radius) {
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (metric_dist(data.metric(), x, data.point(i)) <= radius) ++count;
    return static_cast<double>(count) / static_cast<double>(n);
  };

  const double outer = empirical_mass(r);
  HomogeneityEstimate est;
  std::vector<std::pair<double, double>> pts;  // (ln radius, ln mass)
  for (double e : eps_grid) {
    const double m = empirical_mass(e * r);
    est.mass_pairs.push_back({e, m, outer});
    if (m > 0.0) pts.emplace_back(std::log(e * r), std::log(m));
  }
  if (outer > 0.0) pts.emplace_back(std::log(r), std::log(outer));
  if (pts.size() < 2) return std::nullopt;

  double sx = 0.0, sy = 0.0;
  for (const auto& [a, b] : pts) {
    sx += a;
    sy += b;
  }
  const double mx = sx / pts.size(), my = sy / pts.size();
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [a, b] : pts) {
    sxx += (a - mx) * (a - mx);
    sxy += (a - mx) * (b - my);
  }
  if (sxx <= 0.0) return std::nullopt;
  est.d_hat = sxy / sxx;  // >= 0: mass is nondecreasing in radius
  return est;
}

//-----------------------------------------------------------------------------
// VC concentration check (relative VC bounds on balls)
//-----------------------------------------------------------------------------

struct ConcentrationReport {
  int trials = 0;
  double a = 0.0;
  double alpha_n = 0.0;
  long balls_tested = 0;
  long violations_forward = 0;   // mu(B) >= 3a but mu_n(B) < a
  long violations_backward = 0;  // mu_n(B) >= 3a but mu(B) < a
  int trials_with_violation = 0;

  double trial_violation_rate() const {
    return trials > 0 ? static_cast<double>(trials_with_violation) / trials : 0.0;
  }
};

inline double vc_alpha_n(std::size_t n, double delta, int vc_dim) {
  return (vc_dim * std::log(2.0 * static_cast<double>(n)) + std::log(8.0 / delta)) /
         static_cast<double>(n);
}

// Draws `trials` independent n-samples and tests both implications of the
// relative VC bound over balls centered at sample points, radii on a
// geometric grid. Requires analytic masses for the world.
inline ConcentrationReport vc_concentration_check(const WorldSpec& spec, std::size_t n,
                                                  double delta, int vc_dim, double a, int trials,
                                                  std::mt19937_64& rng) {
  validate_world(spec);
  if (n < 1) throw std::invalid_argument("vc_concentration_check: n must be >= 1");
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("vc_concentration_check: delta must lie in (0,1)");
  if (trials < 1) throw std::invalid_argument("vc_concentration_check: trials must be >= 1");

  ConcentrationReport report;
  report.trials = trials;
  report.alpha_n = vc_alpha_n(n, delta, vc_dim);
  report.a = a;
  if (!(a >= report.alpha_n))
    throw std::invalid_argument("vc_concentration_check: need a >= alpha_n");

  {  // analytic masses must exist for this world
    auto probe_rng = make_rng(mix_seed(spec.seed, 0x7072ULL));
    const auto probe = sample_points(spec, 1, probe_rng);
    if (!true_ball_mass(spec, probe[0], 0.1).has_value())
      throw std::invalid_argument("vc_concentration_check: analytic ball mass unavailable");
  }

  const double diam = world_diameter(spec);
  std::vector<double> radii;
  for (double r = 0.02 * diam; r < diam; r *= 1.8) radii.push_back(r);

  const Metric metric{};  // worlds are Euclidean
  const std::size_t centers = std::min<std::size_t>(32, n);
  for (int t = 0; t < trials; ++t) {
    auto trial_rng = make_rng(mix_seed(rng(), static_cast<std::uint64_t>(t)));
    const std::vector<Point> pts = sample_points(spec, n, trial_rng);
    bool violated = false;
    for (std::size_t c = 0; c < centers; ++c) {
      for (double r : radii) {
        const auto mass = true_ball_mass(spec, pts[c], r);
        if (!mass.has_value()) continue;
        std::size_t count = 0;
        for (const Point& p : pts)
          if (metric_dist(metric, pts[c], p) <= r) ++count;
        const double emp = static_cast<double>(count) / static_cast<double>(n);
        ++report.balls_tested;
        if (*mass >= 3.0 * a && emp < a) {
          ++report.violations_forward;
          violated = true;
        }
        if (emp >= 3.0 * a && *mass < a) {
          ++report.violations_backward;
          violated = true;
        }
      }
    }
    if (violated) ++report.trials_with_violation;
  }
  return report;
}

//-----------------------------------------------------------------------------
// Targets defined on a world (composed with the inverse rotation so rates are
// invariant under the ambient embedding)
//-----------------------------------------------------------------------------

enum class TargetKind { constant, linear, zigzag, tent, sine };

inline TargetKind target_kind_from_name(const std::string& name) {
  if (name == "constant") return TargetKind::constant;
  if (name == "linear") return TargetKind::linear;
  if (name == "zigzag") return TargetKind::zigzag;
  if (name == "tent") return TargetKind::tent;
  if (name == "sine") return TargetKind::sine;
  throw std::invalid_argument("unknown target kind: " + name);
}

inline std::string target_kind_name(TargetKind k) {
  switch (k) {
    case TargetKind::constant: return "constant";
    case TargetKind::linear: return "linear";
    case TargetKind::zigzag: return "zigzag";
    case TargetKind::tent: return "tent";
    case TargetKind::sine: return "sine";
  }
  return "?";
}

// Number of intrinsic coordinates a world target varies along.
inline int target_coordinate_count(const WorldSpec& spec) {
  switch (spec.kind) {
    case WorldKind::curve_in_ambient: return 1;
    case WorldKind::mixture: return 1;
    default: return spec.d;
  }
}

inline TargetFunction make_world_target(const WorldSpec& spec, TargetKind kind, double lambda,
                                        int zigzag_levels = 6, double zigzag_base_period = 1.6) {
  validate_world(spec);
  if (!(lambda >= 0.0)) throw std::invalid_argument("make_world_target: lambda must be >= 0");
  const Rotation rot = world_rotation(spec);
  const int m = target_coordinate_count(spec);
  const double axis_scale = 1.0 / std::sqrt(static_cast<double>(m));
  const std::uint64_t phase_seed = mix_seed(spec.seed, 0x7461726774ULL);

  TargetFunction f;
  switch (kind) {
    case TargetKind::constant:
      f.evaluator = [](std::span<const double>) { return 1.0; };
      f.lipschitz_lambda = 0.0;
      return f;
    case TargetKind::linear:
      f.evaluator = [rot, lambda, m, axis_scale](std::span<const double> x) {
        const Point u = rot.apply_inverse(x);
        double s = 0.0;
        for (int j = 0; j < m; ++j) s += u[static_cast<std::size_t>(j)];
        return lambda * axis_scale * s;
      };
      break;
    case TargetKind::zigzag:
      f.evaluator = [rot, lambda, m, axis_scale, zigzag_levels, zigzag_base_period,
                     phase_seed](std::span<const double> x) {
        const Point u = rot.apply_inverse(x);
        double s = 0.0;
        for (int j = 0; j < m; ++j)
          s += multiscale_zigzag(u[static_cast<std::size_t>(j)], zigzag_levels,
                                 zigzag_base_period,
                                 mix_seed(phase_seed, static_cast<std::uint64_t>(j)));
        return lambda * axis_scale * s;
      };
      break;
    case TargetKind::tent:
      f.evaluator = [rot, lambda, m, axis_scale](std::span<const double> x) {
        const Point u = rot.apply_inverse(x);
        double s = 0.0;
        for (int j = 0; j < m; ++j) {
          const double t = u[static_cast<std::size_t>(j)];
          s += std::min(t, 1.0 - t);
        }
        return lambda * axis_scale * s;
      };
      break;
    case TargetKind::sine:
      f.evaluator = [rot, lambda, m, axis_scale](std::span<const double> x) {
        constexpr double amp = 0.3;
        const Point u = rot.apply_inverse(x);
        double s = 0.0;
        for (int j = 0; j < m; ++j) s += amp * std::sin(u[static_cast<std::size_t>(j)] / amp);
        return lambda * axis_scale * s;
      };
      break;
  }
  f.lipschitz_lambda = lambda;
  return f;
}

//-----------------------------------------------------------------------------
// WorldSpec serialization: flat key=value text
//-----------------------------------------------------------------------------

inline std::string world_kind_name(WorldKind k) {
  switch (k) {
    case WorldKind::hyperplane_uniform: return "hyperplane-uniform";
    case WorldKind::sphere_surface: return "sphere-surface";
    case WorldKind::curve_in_ambient: return "curve-in-ambient";
    case WorldKind::sparse_support: return "sparse-support";
    case WorldKind::mixture: return "mixture";
  }
  return "?";
}

inline WorldKind world_kind_from_name(const std::string& name) {
  if (name == "hyperplane-uniform") return WorldKind::hyperplane_uniform;
  if (name == "sphere-surface") return WorldKind::sphere_surface;
  if (name == "curve-in-ambient") return WorldKind::curve_in_ambient;
  if (name == "sparse-support") return WorldKind::sparse_support;
  if (name == "mixture") return WorldKind::mixture;
  throw std::invalid_argument("unknown world kind: " + name);
}

namespace detail {

inline void write_world_keys(const WorldSpec& s, const std::string& prefix,
                             std::ostringstream& out) {
  out << prefix << "kind=" << world_kind_name(s.kind) << "\n";
  out << prefix << "d=" << s.d << "\n";
  out << prefix << "D=" << s.D << "\n";
  out << prefix << "seed=" << s.seed << "\n";
  out << prefix << "rotate=" << (s.rotate ? 1 : 0) << "\n";
  if (s.kind == WorldKind::curve_in_ambient) {
    out << prefix << "curve_length=" << s.curve_length << "\n";
    out << prefix << "curve_pitch=" << s.curve_pitch << "\n";
  }
  if (s.kind == WorldKind::mixture) {
    out << prefix << "components=" << s.components.size() << "\n";
    for (std::size_t c = 0; c < s.components.size(); ++c) {
      out << prefix << "weight" << c << "=" << s.mixture_weights[c] << "\n";
      write_world_keys(s.components[c], prefix + "component" + std::to_string(c) + ".", out);
    }
  }
}

inline WorldSpec read_world_keys(const std::map<std::string, std::string>& kv,
                                 const std::string& prefix) {
  auto get = [&](const std::string& key) -> std::optional<std::string> {
    const auto it = kv.find(prefix + key);
    if (it == kv.end()) return std::nullopt;
    return it->second;
  };
  auto require = [&](const std::string& key) {
    const auto v = get(key);
    if (!v) throw std::invalid_argument("world config: missing key " + prefix + key);
    return *v;
  };
  WorldSpec s;
  s.kind = world_kind_from_name(require("kind"));
  s.d = std::stoi(require("d"));
  s.D = std::stoi(require("D"));
  if (const auto v = get("seed")) s.seed = std::stoull(*v);
  if (const auto v = get("rotate")) s.rotate = std::stoi(*v) != 0;
  if (const auto v = get("curve_length")) s.curve_length = std::stod(*v);
  if (const auto v = get("curve_pitch")) s.curve_pitch = std::stod(*v);
  if (s.kind == WorldKind::mixture) {
    const std::size_t count = std::stoul(require("components"));
    for (std::size_t c = 0; c < count; ++c) {
      s.mixture_weights.push_back(std::stod(require("weight" + std::to_string(c))));
      s.components.push_back(
          read_world_keys(kv, prefix + "component" + std::to_string(c) + "."));
    }
  }
  return s;
}

}  // namespace detail

inline std::string world_to_config_text(const WorldSpec& spec) {
  std::ostringstream out;
  out.precision(17);
  detail::write_world_keys(spec, "", out);
  return out.str();
}

inline std::map<std::string, std::string> parse_key_value_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: malformed line (expected key=value): " + line);
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

inline WorldSpec world_from_config_text(const std::string& text) {
  const auto kv = parse_key_value_text(text);
  WorldSpec s = detail::read_world_keys(kv, "");
  validate_world(s);
  return s;
}

}  // namespace adaknn
