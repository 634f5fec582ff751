#include <doctest.h>

#include "adaknn/core.hpp"
#include "adaknn/nn_index.hpp"
#include "adaknn/regressor.hpp"

using namespace adaknn;

namespace {

// Independent re-implementation of the weighted estimate: full scan, direct
// normalized-kernel formula. The oracle for predict_fixed_k.
double direct_estimate(const Dataset& ds, const Point& x, int k, const Kernel& kernel) {
  std::vector<double> dist(ds.n());
  for (std::size_t i = 0; i < ds.n(); ++i) dist[i] = metric_dist(ds.metric(), x, ds.point(i));
  std::vector<double> sorted = dist;
  std::sort(sorted.begin(), sorted.end());
  const double r_k = sorted[static_cast<std::size_t>(k) - 1];
  if (r_k == 0.0) {
    double sum = 0.0;
    std::size_t m = 0;
    for (std::size_t i = 0; i < ds.n(); ++i)
      if (dist[i] == 0.0) {
        sum += ds.label(i);
        ++m;
      }
    return sum / static_cast<double>(m);
  }
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < ds.n(); ++i) {
    const double w = dist[i] <= r_k ? kernel_eval(kernel, dist[i] / r_k) : 0.0;
    num += w * ds.label(i);
    den += w;
  }
  return num / den;
}

Dataset random_dataset(std::mt19937_64& rng, std::size_t n, std::size_t dim,
                       bool lattice = false) {
  std::vector<double> coords, labels;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dim; ++j)
      coords.push_back(lattice ? std::floor(uniform_in(rng, 0, 3)) : uniform_in(rng, 0, 1));
    labels.push_back(uniform_in(rng, -2, 2));
  }
  return Dataset(std::move(coords), std::move(labels), dim);
}

}  // namespace

TEST_CASE("equidistant neighbors share weight equally") {
  // three points at distance exactly 1 from the origin
  const Dataset ds({1, 0, -1, 0, 0, 1}, {1, 2, 3}, 2);
  const Index index(ds);
  const WeightVector w = compute_weights(index.profile(Point{0, 0}), Kernel::box(), 3);
  REQUIRE(w.weights.size() == 3);
  for (double wi : w.weights) CHECK(wi == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(w.sum_sq == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("degenerate radius spreads weight over the zero-distance points") {
  const Dataset ds({0, 0, 0, 5}, {1, 2, 3, 100}, 1);
  const Index index(ds);
  const WeightVector w = compute_weights(index.profile(Point{0.0}), Kernel::box(), 2);
  REQUIRE(w.indices == std::vector<int>{0, 1, 2});
  for (double wi : w.weights) CHECK(wi == doctest::Approx(1.0 / 3.0));
  const Prediction p = predict_fixed_k(index, Point{0.0}, 2, Kernel::box());
  CHECK(p.value == doctest::Approx(2.0));
  CHECK(p.radius == 0.0);
}

TEST_CASE("box kernel: sum of squared weights is 1/k iff exactly k in the ball") {
  auto rng = make_rng(88);
  for (int trial = 0; trial < 300; ++trial) {
    const bool lattice = trial % 2 == 0;
    const Dataset ds = random_dataset(rng, 2 + static_cast<std::size_t>(uniform_in(rng, 0, 8)),
                                      1, lattice);
    const Index index(ds);
    Point q{lattice ? std::floor(uniform_in(rng, 0, 3)) : uniform_in(rng, 0, 1)};
    const int k = 1 + static_cast<int>(uniform_in(rng, 0, static_cast<double>(ds.n())));
    const DistanceProfile prof = index.profile(q);
    const WeightVector w = compute_weights(prof, Kernel::box(), k);
    CHECK(w.sum_sq <= 1.0 / k + 1e-12);
    // exhaustive support count
    const double r_k = prof.radius(k);
    std::size_t in_ball = 0;
    for (std::size_t i = 0; i < ds.n(); ++i)
      if (metric_dist(ds.metric(), q, ds.point(i)) <= r_k) ++in_ball;
    if (in_ball == static_cast<std::size_t>(k))
      CHECK(w.sum_sq == doctest::Approx(1.0 / k).epsilon(1e-12));
    else
      CHECK(w.sum_sq < 1.0 / k - 1e-15);
  }
}

TEST_CASE("weight simplex and the K(0)/(K(1) k) bound") {
  auto rng = make_rng(4242);
  const std::vector<Kernel> kernels = {Kernel::box(), Kernel::truncated_gaussian(),
                                       Kernel::linear_floor(0.3)};
  for (int trial = 0; trial < 200; ++trial) {
    const Dataset ds = random_dataset(rng, 30, 2, trial % 3 == 0);
    const Index index(ds);
    const Point q{uniform_in(rng, 0, 1), uniform_in(rng, 0, 1)};
    const DistanceProfile prof = index.profile(q);
    for (const Kernel& kernel : kernels) {
      const int k = 1 + static_cast<int>(uniform_in(rng, 0, 29));
      const WeightVector w = compute_weights(prof, kernel, k);
      double sum = 0.0;
      for (double wi : w.weights) {
        CHECK(wi >= 0.0);
        sum += wi;
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(static_cast<int>(w.weights.size()) >= k);
      CHECK(w.sum_sq <= kernel.at_zero() / (kernel.at_one() * k) + 1e-12);
    }
  }
}

TEST_CASE("constant labels predict the constant for any k and kernel") {
  auto rng = make_rng(17);
  std::vector<double> coords, labels;
  for (int i = 0; i < 25; ++i) {
    coords.push_back(uniform_in(rng, 0, 1));
    labels.push_back(4.25);
  }
  const Dataset ds(std::move(coords), std::move(labels), 1);
  const Index index(ds);
  for (const Kernel& kernel : {Kernel::box(), Kernel::truncated_gaussian()})
    for (int k : {1, 5, 25})
      CHECK(predict_fixed_k(index, Point{0.4}, k, kernel).value ==
            doctest::Approx(4.25).epsilon(1e-15));
}

TEST_CASE("two symmetric samples average to the midpoint") {
  const Dataset ds({-1.0, 1.0}, {0.0, 2.0}, 1);
  const Index index(ds);
  const Prediction p = predict_fixed_k(index, Point{0.0}, 2, Kernel::box());
  CHECK(p.value == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(p.radius == doctest::Approx(1.0));
}

TEST_CASE("predict matches the direct formula on random instances") {
  auto rng = make_rng(9001);
  for (int trial = 0; trial < 200; ++trial) {
    const Dataset ds = random_dataset(rng, 2 + static_cast<std::size_t>(uniform_in(rng, 0, 40)),
                                      2, trial % 4 == 0);
    const Index index(ds);
    const Point q{uniform_in(rng, 0, 1), uniform_in(rng, 0, 1)};
    const int k = 1 + static_cast<int>(uniform_in(rng, 0, static_cast<double>(ds.n())));
    const Kernel kernel = trial % 2 == 0 ? Kernel::box() : Kernel::truncated_gaussian();
    const Prediction p = predict_fixed_k(index, q, k, kernel);
    CHECK(p.value == doctest::Approx(direct_estimate(ds, q, k, kernel)).epsilon(1e-12));
    CHECK(p.k_used == k);
  }
}

TEST_CASE("prediction is a convex combination of support labels") {
  auto rng = make_rng(55);
  for (int trial = 0; trial < 100; ++trial) {
    const Dataset ds = random_dataset(rng, 20, 1);
    const Index index(ds);
    const Point q{uniform_in(rng, -0.2, 1.2)};
    const int k = 1 + static_cast<int>(uniform_in(rng, 0, 19));
    const Prediction p = predict_fixed_k(index, q, k, Kernel::truncated_gaussian());
    const NeighborList support = index.within_radius(q, p.radius);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (int i : support.indices) {
      lo = std::min(lo, ds.label(static_cast<std::size_t>(i)));
      hi = std::max(hi, ds.label(static_cast<std::size_t>(i)));
    }
    CHECK(p.value >= lo - 1e-12);
    CHECK(p.value <= hi + 1e-12);
  }
}

TEST_CASE("k = n with the box kernel is the plain mean") {
  auto rng = make_rng(66);
  const Dataset ds = random_dataset(rng, 31, 2);
  const Index index(ds);
  const Prediction p = predict_fixed_k(index, Point{0.5, 0.5}, 31, Kernel::box());
  double mean = 0.0;
  for (std::size_t i = 0; i < ds.n(); ++i) mean += ds.label(i);
  mean /= static_cast<double>(ds.n());
  CHECK(p.value == doctest::Approx(mean).epsilon(1e-13));
}

TEST_CASE("conditional mean estimate and the bias bound") {
  auto rng = make_rng(313);
  const TargetFunction f = linear_target({0.8, -0.6});
  // noiseless dataset: Y_i = f(X_i)
  std::vector<double> coords, labels;
  for (int i = 0; i < 60; ++i) {
    const double a = uniform_in(rng, 0, 1), b = uniform_in(rng, 0, 1);
    coords.push_back(a);
    coords.push_back(b);
    labels.push_back(f(Point{a, b}));
  }
  const Dataset ds(std::move(coords), std::move(labels), 2);
  const Index index(ds);

  SUBCASE("constant target returns the constant") {
    const TargetFunction c = constant_target(-3.5);
    CHECK(conditional_mean_estimate(index, Point{0.2, 0.9}, 7, Kernel::box(), c) ==
          doctest::Approx(-3.5));
  }

  SUBCASE("noiseless labels make the surrogate equal the estimate") {
    for (int k : {1, 5, 20, 60}) {
      const Prediction p = predict_fixed_k(index, Point{0.3, 0.3}, k, Kernel::box());
      const double surrogate =
          conditional_mean_estimate(index, Point{0.3, 0.3}, k, Kernel::box(), f);
      CHECK(p.value == doctest::Approx(surrogate).epsilon(1e-13));
    }
  }

  SUBCASE("bias bound |f~ - f(x)| <= lambda * r_k") {
    for (int trial = 0; trial < 200; ++trial) {
      const Point q{uniform_in(rng, 0, 1), uniform_in(rng, 0, 1)};
      const int k = 1 + static_cast<int>(uniform_in(rng, 0, 59));
      const Kernel kernel = trial % 2 == 0 ? Kernel::box() : Kernel::truncated_gaussian();
      const Prediction p = predict_fixed_k(index, q, k, kernel);
      const double surrogate = conditional_mean_estimate(index, q, k, kernel, f);
      CHECK(std::abs(surrogate - f(q)) <=
            f.lipschitz_lambda * p.radius * (1.0 + 1e-9) + 1e-15);
    }
  }
}

TEST_CASE("error decomposition") {
  auto rng = make_rng(606);
  const TargetFunction f = linear_target({1.0});

  SUBCASE("zero noise makes the variance term vanish") {
    std::vector<double> coords, labels;
    for (int i = 0; i < 30; ++i) {
      coords.push_back(uniform_in(rng, 0, 1));
      labels.push_back(f(Point{coords.back()}));
    }
    const Dataset ds(std::move(coords), std::move(labels), 1);
    const Index index(ds);
    const auto [variance, bias] = error_decomposition(index, Point{0.4}, 5, Kernel::box(), f);
    CHECK(variance == doctest::Approx(0.0).epsilon(1e-24));
    CHECK(bias >= 0.0);
  }

  SUBCASE("constant target makes the bias term vanish") {
    const TargetFunction c = constant_target(2.0);
    std::vector<double> coords, labels;
    for (int i = 0; i < 30; ++i) {
      coords.push_back(uniform_in(rng, 0, 1));
      labels.push_back(2.0 + uniform_in(rng, -1, 1));
    }
    const Dataset ds(std::move(coords), std::move(labels), 1);
    const Index index(ds);
    const auto [variance, bias] = error_decomposition(index, Point{0.4}, 5, Kernel::box(), c);
    CHECK(bias == doctest::Approx(0.0).epsilon(1e-24));
    CHECK(variance >= 0.0);
  }

  SUBCASE("doubled sum upper-bounds the squared error") {
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<double> coords, labels;
      const std::size_t n = 5 + static_cast<std::size_t>(uniform_in(rng, 0, 30));
      for (std::size_t i = 0; i < n; ++i) {
        coords.push_back(uniform_in(rng, 0, 1));
        labels.push_back(f(Point{coords.back()}) + uniform_in(rng, -0.5, 0.5));
      }
      const Dataset ds(std::move(coords), std::move(labels), 1);
      const Index index(ds);
      const Point q{uniform_in(rng, 0, 1)};
      const int k = 1 + static_cast<int>(uniform_in(rng, 0, static_cast<double>(n - 1)));
      const Prediction p = predict_fixed_k(index, q, k, Kernel::box());
      const auto [variance, bias] = error_decomposition(index, q, k, Kernel::box(), f);
      const double err = p.value - f(q);
      CHECK(2.0 * (variance + bias) + 1e-12 >= err * err);
    }
  }
}
