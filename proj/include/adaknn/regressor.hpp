#pragma once

#include <span>
#include <vector>

#include "adaknn/core.hpp"
#include "adaknn/nn_index.hpp"

namespace adaknn {

// Kernel-weighted k-NN regression estimate
//   f_{n,k}(x) = sum_i w_{i,k}(x) Y_i,
//   w_{i,k}(x) = K(rho(x,X_i)/r_{k,n}(x)) / sum_j K(rho(x,X_j)/r_{k,n}(x)).
// The kernel vanishes beyond 1, so only points with rho <= r_{k,n}(x) carry
// weight; points tied with the k-th distance are included.

struct WeightVector {
  std::vector<int> indices;      // support set, ordered by (distance, index)
  std::vector<double> weights;   // nonnegative, sums to 1
  double sum_sq = 0.0;           // sum of squared weights (variance proxy)
  int k = 0;
};

struct Prediction {
  double value = 0.0;
  int k_used = 0;
  double radius = 0.0;        // r_{k,n}(x)
  double weight_sq_sum = 0.0;
};

namespace detail {

// Unnormalized kernel weights over the support set. The estimate divides by
// the total once at the end, so an all-equal label vector reproduces its
// value exactly.
struct RawWeights {
  std::vector<int> indices;
  std::vector<double> raw;
  double total = 0.0;
  double r_k = 0.0;
  int k = 0;
};

// sorted_* must contain every sample point with rho <= sorted_dist[k-1],
// sorted by (distance, index). A distance profile or a radius query both
// qualify.
inline RawWeights raw_weights_from_sorted(std::span<const int> sorted_idx,
                                          std::span<const double> sorted_dist,
                                          const Kernel& kernel, int k) {
  if (k < 1 || static_cast<std::size_t>(k) > sorted_dist.size())
    throw std::invalid_argument("compute_weights: k out of range");
  RawWeights out;
  out.k = k;
  out.r_k = sorted_dist[static_cast<std::size_t>(k) - 1];

  if (out.r_k == 0.0) {
    // Degenerate radius: k or more duplicates of the query. Uniform weight
    // over all zero-distance points, the limit of the formula as r -> 0.
    std::size_t m = 0;
    while (m < sorted_dist.size() && sorted_dist[m] == 0.0) ++m;
    out.indices.assign(sorted_idx.begin(), sorted_idx.begin() + static_cast<std::ptrdiff_t>(m));
    out.raw.assign(m, 1.0);
    out.total = static_cast<double>(m);
    return out;
  }

  std::size_t m = 0;
  while (m < sorted_dist.size() && sorted_dist[m] <= out.r_k) {
    out.raw.push_back(kernel(sorted_dist[m] / out.r_k));
    out.total += out.raw.back();
    ++m;
  }
  out.indices.assign(sorted_idx.begin(), sorted_idx.begin() + static_cast<std::ptrdiff_t>(m));
  return out;
}

template <class LabelFn>
double weighted_mean(const RawWeights& rw, LabelFn&& label) {
  double num = 0.0;
  for (std::size_t i = 0; i < rw.raw.size(); ++i)
    num += rw.raw[i] * label(static_cast<std::size_t>(rw.indices[i]));
  return num / rw.total;
}

inline double weight_sq_sum(const RawWeights& rw) {
  double s = 0.0;
  for (double r : rw.raw) {
    const double w = r / rw.total;
    s += w * w;
  }
  return s;
}

inline WeightVector normalize(RawWeights rw) {
  WeightVector out;
  out.k = rw.k;
  out.sum_sq = weight_sq_sum(rw);
  out.indices = std::move(rw.indices);
  out.weights.resize(rw.raw.size());
  for (std::size_t i = 0; i < rw.raw.size(); ++i) out.weights[i] = rw.raw[i] / rw.total;
  return out;
}

}  // namespace detail

inline WeightVector compute_weights(const DistanceProfile& profile, const Kernel& kernel, int k) {
  return detail::normalize(
      detail::raw_weights_from_sorted(profile.indices, profile.distances, kernel, k));
}

inline WeightVector compute_weights(const NeighborList& support, const Kernel& kernel, int k) {
  return detail::normalize(
      detail::raw_weights_from_sorted(support.indices, support.distances, kernel, k));
}

inline Prediction predict_from_profile(const DistanceProfile& profile, const Dataset& data,
                                       const Kernel& kernel, int k) {
  const detail::RawWeights rw =
      detail::raw_weights_from_sorted(profile.indices, profile.distances, kernel, k);
  Prediction out;
  out.value = detail::weighted_mean(rw, [&](std::size_t i) { return data.label(i); });
  out.k_used = k;
  out.radius = rw.r_k;
  out.weight_sq_sum = detail::weight_sq_sum(rw);
  return out;
}

inline Prediction predict_fixed_k(const Index& index, std::span<const double> x, int k,
                                  const Kernel& kernel) {
  const NeighborList nn = index.knn(x, k);
  // re-query at the k-th radius so points tied with it are not dropped
  const NeighborList support = index.within_radius(x, nn.radius());
  const detail::RawWeights rw =
      detail::raw_weights_from_sorted(support.indices, support.distances, kernel, k);
  Prediction out;
  out.value = detail::weighted_mean(rw, [&](std::size_t i) { return index.data().label(i); });
  out.k_used = k;
  out.radius = rw.r_k;
  out.weight_sq_sum = detail::weight_sq_sum(rw);
  return out;
}

// Noise-free surrogate f~_{n,k}(x) = sum_i w_{i,k}(x) f(X_i); isolates bias.
inline double conditional_mean_estimate(const Index& index, std::span<const double> x, int k,
                                        const Kernel& kernel, const TargetFunction& target) {
  const NeighborList nn = index.knn(x, k);
  const NeighborList support = index.within_radius(x, nn.radius());
  const detail::RawWeights rw =
      detail::raw_weights_from_sorted(support.indices, support.distances, kernel, k);
  return detail::weighted_mean(rw,
                               [&](std::size_t i) { return target(index.data().point(i)); });
}

// Decomposition |f_{n,k}-f|^2 <= 2|f_{n,k}-f~|^2 + 2|f~-f|^2:
// returns {variance_term, bias_term} = {|f_{n,k}-f~|^2, |f~-f|^2}.
inline std::pair<double, double> error_decomposition(const Index& index,
                                                     std::span<const double> x, int k,
                                                     const Kernel& kernel,
                                                     const TargetFunction& target) {
  const NeighborList nn = index.knn(x, k);
  const NeighborList support = index.within_radius(x, nn.radius());
  const detail::RawWeights rw =
      detail::raw_weights_from_sorted(support.indices, support.distances, kernel, k);
  const double estimate =
      detail::weighted_mean(rw, [&](std::size_t i) { return index.data().label(i); });
  const double surrogate =
      detail::weighted_mean(rw, [&](std::size_t i) { return target(index.data().point(i)); });
  const double dv = estimate - surrogate;
  const double db = surrogate - target(x);
  return {dv * dv, db * db};
}

}  // namespace adaknn
