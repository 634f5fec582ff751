#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "adaknn/core.hpp"

namespace adaknn {

// Exact k-NN machinery over a fixed dataset. Ties at the k-th distance break
// by smaller sample index, on every query path, so results are deterministic
// and the tree matches the brute-force oracle exactly.

struct NeighborList {
  std::vector<int> indices;
  std::vector<double> distances;  // nondecreasing; ties ordered by index
  int k = 0;

  double radius() const { return distances.empty() ? 0.0 : distances.back(); }
};

// All n distances from a query, sorted. Entry k-1 is r_{k,n}(x).
struct DistanceProfile {
  std::vector<int> indices;
  std::vector<double> distances;

  std::size_t size() const { return distances.size(); }
  double radius(int k) const { return distances[static_cast<std::size_t>(k) - 1]; }
};

namespace detail {

inline bool closer(double da, int ia, double db, int ib) {
  return da < db || (da == db && ia < ib);
}

}  // namespace detail

// Immutable once built; holds a reference to the dataset, which must outlive
// the index. Euclidean datasets get a kd-tree, other metrics fall back to the
// exact scan. Both paths share one distance routine and one comparator, so
// results match the brute-force oracle bit for bit.
class Index {
 public:
  explicit Index(const Dataset& data) : data_(&data) {
    const int n = static_cast<int>(data.n());
    perm_.resize(n);
    for (int i = 0; i < n; ++i) perm_[i] = i;
    use_tree_ = data.metric().kind == MetricKind::euclidean;
    if (use_tree_) {
      nodes_.reserve(static_cast<std::size_t>(2 * n / kLeafSize + 2));
      build(0, n);
    }
  }

  const Dataset& data() const { return *data_; }

  NeighborList knn(std::span<const double> x, int k) const {
    const int n = static_cast<int>(data_->n());
    if (k < 1 || k > n) throw std::invalid_argument("query_knn: k out of range [1, n]");
    check_query(x);

    // max-heap on (distance, index), lexicographic; top = current worst
    std::vector<std::pair<double, int>> heap;
    heap.reserve(static_cast<std::size_t>(k));
    auto cmp = [](const std::pair<double, int>& a, const std::pair<double, int>& b) {
      return detail::closer(a.first, a.second, b.first, b.second);
    };
    auto offer = [&](int i) {
      const double d = metric_dist(data_->metric(), x, data_->point(i));
      if (static_cast<int>(heap.size()) < k) {
        heap.emplace_back(d, i);
        std::push_heap(heap.begin(), heap.end(), cmp);
      } else if (detail::closer(d, i, heap.front().first, heap.front().second)) {
        std::pop_heap(heap.begin(), heap.end(), cmp);
        heap.back() = {d, i};
        std::push_heap(heap.begin(), heap.end(), cmp);
      }
    };

    if (use_tree_) {
      search_knn(0, x, k, heap, offer);
    } else {
      for (int i = 0; i < n; ++i) offer(i);
    }

    std::sort(heap.begin(), heap.end(), cmp);
    NeighborList out;
    out.k = k;
    out.indices.reserve(heap.size());
    out.distances.reserve(heap.size());
    for (const auto& [d, i] : heap) {
      out.indices.push_back(i);
      out.distances.push_back(d);
    }
    return out;
  }

  // Every sample point with rho(x, X_i) <= r, sorted by (distance, index).
  NeighborList within_radius(std::span<const double> x, double r) const {
    if (r < 0.0) throw std::invalid_argument("within_radius: negative radius");
    check_query(x);
    std::vector<std::pair<double, int>> hits;
    if (use_tree_) {
      collect_radius(0, x, r, hits);
    } else {
      for (int i = 0; i < static_cast<int>(data_->n()); ++i) {
        const double d = metric_dist(data_->metric(), x, data_->point(i));
        if (d <= r) hits.emplace_back(d, i);
      }
    }
    std::sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) {
      return detail::closer(a.first, a.second, b.first, b.second);
    });
    NeighborList out;
    out.k = static_cast<int>(hits.size());
    for (const auto& [d, i] : hits) {
      out.indices.push_back(i);
      out.distances.push_back(d);
    }
    return out;
  }

  DistanceProfile profile(std::span<const double> x) const {
    check_query(x);
    const int n = static_cast<int>(data_->n());
    std::vector<std::pair<double, int>> all;
    all.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
      all.emplace_back(metric_dist(data_->metric(), x, data_->point(i)), i);
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
      return detail::closer(a.first, a.second, b.first, b.second);
    });
    DistanceProfile out;
    out.indices.reserve(all.size());
    out.distances.reserve(all.size());
    for (const auto& [d, i] : all) {
      out.indices.push_back(i);
      out.distances.push_back(d);
    }
    return out;
  }

 private:
  static constexpr int kLeafSize = 16;

  struct Node {
    int begin = 0, end = 0;          // range into perm_
    int left = -1, right = -1;       // children; leaf iff left < 0
    std::vector<double> lo, hi;      // bounding box
  };

  void check_query(std::span<const double> x) const {
    if (x.size() != data_->dim())
      throw std::invalid_argument("query: point dimension does not match dataset");
  }

  int build(int begin, int end) {
    const std::size_t dim = data_->dim();
    Node node;
    node.begin = begin;
    node.end = end;
    node.lo.assign(dim, std::numeric_limits<double>::infinity());
    node.hi.assign(dim, -std::numeric_limits<double>::infinity());
    for (int i = begin; i < end; ++i) {
      const auto p = data_->point(static_cast<std::size_t>(perm_[i]));
      for (std::size_t j = 0; j < dim; ++j) {
        node.lo[j] = std::min(node.lo[j], p[j]);
        node.hi[j] = std::max(node.hi[j], p[j]);
      }
    }
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back(std::move(node));

    if (end - begin > kLeafSize) {
      std::size_t split_dim = 0;
      double spread = -1.0;
      for (std::size_t j = 0; j < dim; ++j) {
        const double s = nodes_[id].hi[j] - nodes_[id].lo[j];
        if (s > spread) {
          spread = s;
          split_dim = j;
        }
      }
      if (spread > 0.0) {
        const int mid = begin + (end - begin) / 2;
        std::nth_element(perm_.begin() + begin, perm_.begin() + mid, perm_.begin() + end,
                         [&](int a, int b) {
                           const double ca = data_->point(static_cast<std::size_t>(a))[split_dim];
                           const double cb = data_->point(static_cast<std::size_t>(b))[split_dim];
                           return ca < cb || (ca == cb && a < b);
                         });
        const int left = build(begin, mid);
        const int right = build(mid, end);
        nodes_[id].left = left;
        nodes_[id].right = right;
      }
      // spread == 0: all points identical, keep as a leaf
    }
    return id;
  }

  // Smallest possible distance from x to any point inside the node's box.
  double box_min_dist(const Node& node, std::span<const double> x) const {
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      double d = 0.0;
      if (x[j] < node.lo[j]) d = node.lo[j] - x[j];
      else if (x[j] > node.hi[j]) d = x[j] - node.hi[j];
      s += d * d;
    }
    return std::sqrt(s);
  }

  template <class Offer>
  void search_knn(int id, std::span<const double> x, int k,
                  std::vector<std::pair<double, int>>& heap, Offer&& offer) const {
    const Node& node = nodes_[static_cast<std::size_t>(id)];
    // prune only on strict >, so boundary ties are always examined
    if (static_cast<int>(heap.size()) == k && box_min_dist(node, x) > heap.front().first)
      return;
    if (node.left < 0) {
      for (int i = node.begin; i < node.end; ++i) offer(perm_[i]);
      return;
    }
    const double dl = box_min_dist(nodes_[static_cast<std::size_t>(node.left)], x);
    const double dr = box_min_dist(nodes_[static_cast<std::size_t>(node.right)], x);
    if (dl <= dr) {
      search_knn(node.left, x, k, heap, offer);
      search_knn(node.right, x, k, heap, offer);
    } else {
      search_knn(node.right, x, k, heap, offer);
      search_knn(node.left, x, k, heap, offer);
    }
  }

  void collect_radius(int id, std::span<const double> x, double r,
                      std::vector<std::pair<double, int>>& hits) const {
    const Node& node = nodes_[static_cast<std::size_t>(id)];
    if (box_min_dist(node, x) > r) return;
    if (node.left < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        const int idx = perm_[i];
        const double d = metric_dist(data_->metric(), x, data_->point(static_cast<std::size_t>(idx)));
        if (d <= r) hits.emplace_back(d, idx);
      }
      return;
    }
    collect_radius(node.left, x, r, hits);
    collect_radius(node.right, x, r, hits);
  }

  const Dataset* data_;
  std::vector<int> perm_;
  std::vector<Node> nodes_;
  bool use_tree_ = false;
};

inline Index build_index(const Dataset& data) { return Index(data); }

inline NeighborList query_knn(const Index& index, std::span<const double> x, int k) {
  return index.knn(x, k);
}

inline DistanceProfile query_profile(const Index& index, std::span<const double> x) {
  return index.profile(x);
}

// Testing oracle: full scan plus sort, no acceleration structure.
inline NeighborList brute_force_knn(const Dataset& data, std::span<const double> x, int k) {
  const int n = static_cast<int>(data.n());
  if (k < 1 || k > n) throw std::invalid_argument("brute_force_knn: k out of range [1, n]");
  if (x.size() != data.dim())
    throw std::invalid_argument("brute_force_knn: point dimension does not match dataset");
  std::vector<std::pair<double, int>> all;
  all.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    all.emplace_back(metric_dist(data.metric(), x, data.point(static_cast<std::size_t>(i))), i);
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    return detail::closer(a.first, a.second, b.first, b.second);
  });
  NeighborList out;
  out.k = k;
  for (int i = 0; i < k; ++i) {
    out.indices.push_back(all[static_cast<std::size_t>(i)].second);
    out.distances.push_back(all[static_cast<std::size_t>(i)].first);
  }
  return out;
}

}  // namespace adaknn
