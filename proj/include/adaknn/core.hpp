#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace adaknn {

using Point = std::vector<double>;

//-----------------------------------------------------------------------------
// Randomness
//-----------------------------------------------------------------------------
// Every operation that consumes randomness takes an explicit engine seeded
// from a 64-bit value; derived streams come from splitmix64 so independent
// reps/trials stay reproducible. No global state anywhere.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream));
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return mix_seed(mix_seed(seed, a), b);
}

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

// Uniform in (0,1), 53 usable bits. Avoids the implementation-defined
// sequences of std::uniform_real_distribution so seeded runs are stable.
inline double uniform01(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

inline double uniform_in(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

// Box-Muller, two fresh uniforms per draw (no cached spare).
inline double standard_normal(std::mt19937_64& rng) {
  const double u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

//-----------------------------------------------------------------------------
// Metric
//-----------------------------------------------------------------------------

enum class MetricKind { euclidean, manhattan };

struct Metric {
  MetricKind kind = MetricKind::euclidean;
};

inline double metric_dist(const Metric& metric, std::span<const double> p,
                          std::span<const double> q) {
  if (p.size() != q.size())
    throw std::invalid_argument("metric_dist: dimension mismatch (" +
                                std::to_string(p.size()) + " vs " +
                                std::to_string(q.size()) + ")");
  switch (metric.kind) {
    case MetricKind::euclidean: {
      double s = 0.0;
      for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = p[i] - q[i];
        s += d * d;
      }
      return std::sqrt(s);
    }
    case MetricKind::manhattan: {
      double s = 0.0;
      for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
      return s;
    }
  }
  throw std::logic_error("metric_dist: unknown metric kind");
}

//-----------------------------------------------------------------------------
// Dataset: immutable labeled sample in R^D with its metric attached
//-----------------------------------------------------------------------------

class Dataset {
 public:
  Dataset(std::vector<double> coords, std::vector<double> labels, std::size_t dim,
          Metric metric = {})
      : coords_(std::move(coords)), labels_(std::move(labels)), dim_(dim), metric_(metric) {
    if (dim_ < 1) throw std::invalid_argument("Dataset: dimension must be >= 1");
    if (labels_.empty()) throw std::invalid_argument("Dataset: need at least one sample");
    if (coords_.size() != labels_.size() * dim_)
      throw std::invalid_argument("Dataset: coords/labels size mismatch");
    for (double v : coords_)
      if (!std::isfinite(v)) throw std::invalid_argument("Dataset: non-finite coordinate");
    for (double v : labels_)
      if (!std::isfinite(v)) throw std::invalid_argument("Dataset: non-finite label");
  }

  static Dataset from_points(const std::vector<Point>& pts, std::vector<double> labels,
                             Metric metric = {}) {
    if (pts.empty()) throw std::invalid_argument("Dataset: need at least one sample");
    const std::size_t dim = pts.front().size();
    std::vector<double> flat;
    flat.reserve(pts.size() * dim);
    for (const Point& p : pts) {
      if (p.size() != dim) throw std::invalid_argument("Dataset: inconsistent dimensions");
      flat.insert(flat.end(), p.begin(), p.end());
    }
    return Dataset(std::move(flat), std::move(labels), dim, metric);
  }

  std::size_t n() const { return labels_.size(); }
  std::size_t dim() const { return dim_; }
  std::span<const double> point(std::size_t i) const {
    return {coords_.data() + i * dim_, dim_};
  }
  double label(std::size_t i) const { return labels_[i]; }
  std::span<const double> labels() const { return labels_; }
  const Metric& metric() const { return metric_; }

 private:
  std::vector<double> coords_;  // row-major, n * dim
  std::vector<double> labels_;
  std::size_t dim_;
  Metric metric_;
};

//-----------------------------------------------------------------------------
// Kernel: non-increasing weight profile on [0,1], K(1) > 0, zero beyond 1.
// Admissibility is enforced at construction; e.g. the common triangular
// kernel has K(1) = 0 and is rejected.
//-----------------------------------------------------------------------------

enum class KernelKind { box, truncated_gaussian, linear_floor };

class Kernel {
 public:
  static Kernel box() { return Kernel(KernelKind::box, 1.0); }
  static Kernel truncated_gaussian() {
    return Kernel(KernelKind::truncated_gaussian, std::exp(-0.5));
  }
  // K(u) = 1 - (1 - value_at_one) * u on [0,1]; linear decay to a positive floor.
  static Kernel linear_floor(double value_at_one) {
    return Kernel(KernelKind::linear_floor, value_at_one);
  }

  double operator()(double u) const {
    if (u < 0.0) throw std::invalid_argument("kernel_eval: negative argument");
    if (u > 1.0) return 0.0;
    switch (kind_) {
      case KernelKind::box:
        return 1.0;
      case KernelKind::truncated_gaussian:
        return std::exp(-0.5 * u * u);
      case KernelKind::linear_floor:
        return 1.0 - (1.0 - at_one_) * u;
    }
    throw std::logic_error("kernel: unknown kind");
  }

  double at_zero() const { return 1.0; }
  double at_one() const { return at_one_; }
  KernelKind kind() const { return kind_; }

  std::string name() const {
    switch (kind_) {
      case KernelKind::box: return "box";
      case KernelKind::truncated_gaussian: return "tgauss";
      case KernelKind::linear_floor: return "linear-floor";
    }
    return "?";
  }

 private:
  Kernel(KernelKind kind, double at_one) : kind_(kind), at_one_(at_one) {
    if (!(at_one_ > 0.0) || at_one_ > 1.0)
      throw std::invalid_argument("Kernel: K(1) must lie in (0,1]; K(1)=0 is inadmissible");
  }

  KernelKind kind_;
  double at_one_;
};

inline double kernel_eval(const Kernel& kernel, double u) { return kernel(u); }

//-----------------------------------------------------------------------------
// Target functions
//-----------------------------------------------------------------------------

struct TargetFunction {
  std::function<double(std::span<const double>)> evaluator;
  double lipschitz_lambda = 0.0;

  double operator()(std::span<const double> x) const { return evaluator(x); }
};

inline TargetFunction constant_target(double c) {
  return {.evaluator = [c](std::span<const double>) { return c; }, .lipschitz_lambda = 0.0};
}

// f(x) = <direction, x>; Lipschitz constant is the Euclidean norm of direction.
inline TargetFunction linear_target(Point direction) {
  double norm = 0.0;
  for (double v : direction) norm += v * v;
  norm = std::sqrt(norm);
  return {.evaluator =
              [dir = std::move(direction)](std::span<const double> x) {
                double s = 0.0;
                for (std::size_t i = 0; i < dir.size() && i < x.size(); ++i) s += dir[i] * x[i];
                return s;
              },
          .lipschitz_lambda = norm};
}

// Unit-amplitude triangle wave with period 1 and slope +-4, value in [-1, 1].
inline double triangle_wave(double s) {
  const double frac = s - std::floor(s + 0.5);  // in [-1/2, 1/2)
  return 4.0 * std::abs(frac) - 1.0;
}

// Superposition of dyadic triangle waves, each level 1-Lipschitz after the
// 1/levels normalization. The result is exactly 1-Lipschitz in t, with slope
// hitting +-1 where the level slopes align.
inline double multiscale_zigzag(double t, int levels, double base_period,
                                std::uint64_t phase_seed = 0) {
  if (levels < 1) throw std::invalid_argument("multiscale_zigzag: need levels >= 1");
  if (!(base_period > 0.0)) throw std::invalid_argument("multiscale_zigzag: period must be > 0");
  double value = 0.0;
  double period = base_period;
  for (int j = 0; j < levels; ++j) {
    const double phase =
        static_cast<double>(splitmix64(phase_seed + static_cast<std::uint64_t>(j)) >> 11) *
        0x1.0p-53;
    value += (period / 4.0) * triangle_wave(t / period + phase);
    period *= 0.5;
  }
  return value / static_cast<double>(levels);
}

//-----------------------------------------------------------------------------
// Noise model: conditional law of Y - f(x), with uniformly bounded tails.
//-----------------------------------------------------------------------------

enum class NoiseKind { none, bounded, gaussian };

namespace detail {

// Upper quantile of the standard normal: smallest t with P(N > t) <= p.
// Bisection on erfc; plenty for tail bookkeeping.
inline double normal_upper_quantile(double p) {
  if (p >= 0.5) return 0.0;
  if (p <= 0.0) return std::numeric_limits<double>::infinity();
  auto upper = [](double t) { return 0.5 * std::erfc(t / std::numbers::sqrt2); };
  double lo = 0.0, hi = 1.0;
  while (upper(hi) > p) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-12 * (1.0 + hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    (upper(mid) > p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

class NoiseModel {
 public:
  static NoiseModel none() { return NoiseModel(NoiseKind::none, 0.0); }
  static NoiseModel bounded(double m) {
    if (!(m >= 0.0)) throw std::invalid_argument("NoiseModel: bound must be >= 0");
    return NoiseModel(NoiseKind::bounded, m);
  }
  static NoiseModel gaussian(double sigma) {
    if (!(sigma >= 0.0)) throw std::invalid_argument("NoiseModel: sigma must be >= 0");
    return NoiseModel(NoiseKind::gaussian, sigma);
  }

  NoiseKind kind() const { return kind_; }
  double param() const { return param_; }

  // Uniform bound on the conditional standard deviation of Y given X = x.
  double sigma_y() const {
    switch (kind_) {
      case NoiseKind::none: return 0.0;
      case NoiseKind::bounded: return param_ / std::sqrt(3.0);  // uniform on [-M, M]
      case NoiseKind::gaussian: return param_;
    }
    return 0.0;
  }

  // Tail quantile t_Y(delta): smallest t with sup_x P(|Y - f(x)| > t) <= delta.
  double tail(double delta) const {
    if (!(delta > 0.0)) throw std::invalid_argument("NoiseModel::tail: delta must be > 0");
    if (delta >= 1.0) return 0.0;
    switch (kind_) {
      case NoiseKind::none: return 0.0;
      case NoiseKind::bounded: return param_ * (1.0 - delta);  // uniform on [-M, M]
      case NoiseKind::gaussian: return param_ * detail::normal_upper_quantile(delta / 2.0);
    }
    return 0.0;
  }

 private:
  NoiseModel(NoiseKind kind, double param) : kind_(kind), param_(param) {}

  NoiseKind kind_;
  double param_;
};

inline double draw_label(const NoiseModel& noise, double f_value, std::mt19937_64& rng) {
  switch (noise.kind()) {
    case NoiseKind::none: return f_value;
    case NoiseKind::bounded: return f_value + uniform_in(rng, -noise.param(), noise.param());
    case NoiseKind::gaussian: return f_value + noise.param() * standard_normal(rng);
  }
  return f_value;
}

//-----------------------------------------------------------------------------
// Lipschitz audit: empirical sup of |f(a)-f(b)| / rho(a,b) over sampled pairs.
//-----------------------------------------------------------------------------

template <class F, class PairSampler>
double empirical_lipschitz(F&& f, const Metric& metric, PairSampler&& sample_pair, int pairs,
                           std::mt19937_64& rng) {
  double worst = 0.0;
  for (int i = 0; i < pairs; ++i) {
    const auto [a, b] = sample_pair(rng);
    const double d = metric_dist(metric, a, b);
    if (d <= 0.0) continue;
    worst = std::max(worst, std::abs(f(a) - f(b)) / d);
  }
  return worst;
}

}  // namespace adaknn
