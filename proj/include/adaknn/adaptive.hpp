#pragma once

#include <optional>
#include <span>

#include "adaknn/core.hpp"
#include "adaknn/nn_index.hpp"
#include "adaknn/regressor.hpp"

namespace adaknn {

// Per-query choice of k balancing the variance proxy theta/k against the
// squared bias proxy r_{k,n}^2(x):
//   k1 = largest k in [n] with Delta^2 * theta / k >= r_{k,n}^2(x),
//   k2 = min(k1 + 1, n),
//   k  = argmin over {k1, k2} of theta/k + r_{k,n}^2(x), ties to smaller k.

struct AdaptiveConfig {
  double delta = 0.05;               // confidence level in (0,1)
  double theta = 1.0;                // theta_{n,delta}; must be >= 1
  std::optional<double> delta_cap;   // Delta; nullopt = per-query max distance
};

struct SelectionDiagnostics {
  int k1 = 0;
  int k2 = 0;
  double objective_k1 = 0.0;
  double objective_k2 = 0.0;
  int chosen = 0;
  double delta_cap_used = 0.0;
};

// theta = ln^2(n/delta), floored by ln(n/delta) and 1. The noise model is
// accepted for interface symmetry; this default implements only the
// log-squared rule, which upper-bounds the Gaussian-noise prescription.
inline double default_theta(std::size_t n, double delta,
                            [[maybe_unused]] const NoiseModel& noise = NoiseModel::none()) {
  if (n < 1) throw std::invalid_argument("default_theta: n must be >= 1");
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("default_theta: delta must lie in (0,1)");
  const double l = std::log(static_cast<double>(n) / delta);
  return std::max({1.0, l, l * l});
}

inline SelectionDiagnostics select_k(const DistanceProfile& profile, const AdaptiveConfig& cfg) {
  const int n = static_cast<int>(profile.size());
  if (n < 1) throw std::invalid_argument("select_k: empty profile");
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0))
    throw std::invalid_argument("select_k: delta must lie in (0,1)");
  if (!(cfg.theta >= 1.0)) throw std::invalid_argument("select_k: theta must be >= 1");

  const double max_dist = profile.distances.back();
  const double cap = cfg.delta_cap.value_or(max_dist);
  if (cap < max_dist)
    throw std::invalid_argument("select_k: delta_cap smaller than the max query distance");

  const double cap_sq_theta = cap * cap * cfg.theta;
  auto holds = [&](int k) {
    const double r = profile.radius(k);
    return cap_sq_theta / static_cast<double>(k) >= r * r;
  };

  // The condition is monotone (lhs strictly decreasing, r_k nondecreasing):
  // once it fails it stays false, so binary search finds the largest true k.
  // holds(1) is guaranteed by cap >= r_1 and theta >= 1.
  int lo = 1, hi = n;
  while (lo < hi) {
    const int mid = lo + (hi - lo + 1) / 2;
    if (holds(mid)) lo = mid;
    else hi = mid - 1;
  }
  const int k1 = lo;
  const int k2 = std::min(k1 + 1, n);

  auto objective = [&](int k) {
    const double r = profile.radius(k);
    return cfg.theta / static_cast<double>(k) + r * r;
  };

  SelectionDiagnostics diag;
  diag.k1 = k1;
  diag.k2 = k2;
  diag.objective_k1 = objective(k1);
  diag.objective_k2 = objective(k2);
  diag.chosen = diag.objective_k2 < diag.objective_k1 ? k2 : k1;  // tie -> smaller k
  diag.delta_cap_used = cap;
  return diag;
}

struct AdaptivePrediction {
  Prediction prediction;
  SelectionDiagnostics selection;
};

inline AdaptivePrediction predict_adaptive(const Index& index, std::span<const double> x,
                                           const Kernel& kernel, const AdaptiveConfig& cfg) {
  const DistanceProfile profile = index.profile(x);
  const SelectionDiagnostics diag = select_k(profile, cfg);
  return {predict_from_profile(profile, index.data(), kernel, diag.chosen), diag};
}

}  // namespace adaknn
