#include <doctest.h>

#include <cmath>

#include "adaknn/core.hpp"
#include "adaknn/worlds.hpp"

using namespace adaknn;

namespace {

WorldSpec hyperplane(int d, int D, bool rotate = false, std::uint64_t seed = 9) {
  WorldSpec s;
  s.kind = WorldKind::hyperplane_uniform;
  s.d = d;
  s.D = D;
  s.rotate = rotate;
  s.seed = seed;
  return s;
}

WorldSpec sphere(int d, int D) {
  WorldSpec s;
  s.kind = WorldKind::sphere_surface;
  s.d = d;
  s.D = D;
  return s;
}

double monte_carlo_mass(const WorldSpec& spec, const Point& center, double r, std::size_t n,
                        std::mt19937_64& rng) {
  const auto pts = sample_points(spec, n, rng);
  std::size_t count = 0;
  for (const auto& p : pts)
    if (metric_dist(Metric{}, center, p) <= r) ++count;
  return static_cast<double>(count) / static_cast<double>(n);
}

}  // namespace

TEST_CASE("hyperplane embedding zeroes the trailing coordinates") {
  auto rng = make_rng(1);
  const auto pts = sample_points(hyperplane(1, 5), 1000, rng);
  for (const auto& p : pts) {
    CHECK(p[0] >= 0.0);
    CHECK(p[0] <= 1.0);
    for (int j = 1; j < 5; ++j) CHECK(p[static_cast<std::size_t>(j)] == 0.0);
  }
}

TEST_CASE("sphere points sit at unit norm") {
  auto rng = make_rng(2);
  const auto pts = sample_points(sphere(2, 3), 1000, rng);
  for (const auto& p : pts) {
    const double norm = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
    CHECK(std::abs(norm - 1.0) <= 1e-12);
  }
}

TEST_CASE("mixture assignment frequencies match the weights") {
  WorldSpec mix;
  mix.kind = WorldKind::mixture;
  mix.D = 3;
  mix.components = {hyperplane(1, 3), hyperplane(2, 3)};
  mix.mixture_weights = {0.3, 0.7};
  auto rng = make_rng(3);
  const std::size_t n = 20000;
  const auto pts = sample_points(mix, n, rng);
  std::size_t first = 0;
  for (const auto& p : pts)
    if (p[1] == 0.0) ++first;  // d=1 component leaves coordinate 2 at zero (a.s. for d=2)
  const double freq = static_cast<double>(first) / static_cast<double>(n);
  const double sigma = std::sqrt(0.3 * 0.7 / static_cast<double>(n));
  CHECK(std::abs(freq - 0.3) <= 3.0 * sigma);
}

TEST_CASE("curve points fold inside the unit cube") {
  WorldSpec curve;
  curve.kind = WorldKind::curve_in_ambient;
  curve.d = 1;
  curve.D = 5;
  curve.curve_length = 8.0;
  curve.curve_pitch = 0.1;
  auto rng = make_rng(4);
  const auto pts = sample_points(curve, 2000, rng);
  for (const auto& p : pts) {
    CHECK(p[0] >= -1e-12);
    CHECK(p[0] <= 1.0 + 1e-12);
    CHECK(p[1] >= -1e-12);
    CHECK(p[1] <= 1.0 + 1e-12);
    for (int j = 2; j < 5; ++j) CHECK(p[static_cast<std::size_t>(j)] == 0.0);
  }
}

TEST_CASE("sparse support points live in one block") {
  WorldSpec sparse;
  sparse.kind = WorldKind::sparse_support;
  sparse.d = 2;
  sparse.D = 6;
  auto rng = make_rng(5);
  const auto pts = sample_points(sparse, 500, rng);
  for (const auto& p : pts) {
    int nonzero_blocks = 0;
    for (int b = 0; b < 3; ++b)
      if (p[static_cast<std::size_t>(2 * b)] != 0.0 || p[static_cast<std::size_t>(2 * b + 1)] != 0.0)
        ++nonzero_blocks;
    CHECK(nonzero_blocks <= 1);
  }
}

TEST_CASE("sample_world labels through target and noise") {
  const WorldSpec world = hyperplane(1, 2);
  const TargetFunction f = make_world_target(world, TargetKind::linear, 2.0);
  auto rng = make_rng(6);
  const Dataset ds = sample_world(world, 200, f, NoiseModel::none(), rng);
  for (std::size_t i = 0; i < ds.n(); ++i)
    CHECK(ds.label(i) == doctest::Approx(f(ds.point(i))).epsilon(1e-15));
}

TEST_CASE("segment ball mass: interior, boundary, and full") {
  const WorldSpec seg = hyperplane(1, 4);
  const Point x{0.5, 0, 0, 0};
  CHECK(*true_ball_mass(seg, x, 0.125) == doctest::Approx(0.25).epsilon(1e-15));
  // r beyond the diameter captures everything
  CHECK(*true_ball_mass(seg, x, 3.0) == 1.0);
  // boundary point: one-sided interval
  CHECK(*true_ball_mass(seg, Point{0.0, 0, 0, 0}, 0.25) == doctest::Approx(0.25));
  CHECK_THROWS_AS(true_ball_mass(seg, Point{2.0, 0, 0, 0}, 0.1), std::invalid_argument);
}

TEST_CASE("square ball mass matches Monte Carlo") {
  const WorldSpec sq = hyperplane(2, 5);
  auto rng = make_rng(7);
  for (const Point& center : {Point{0.5, 0.5, 0, 0, 0}, Point{0.1, 0.2, 0, 0, 0},
                              Point{0.95, 0.5, 0, 0, 0}}) {
    for (double r : {0.05, 0.2, 0.6}) {
      const auto mass = true_ball_mass(sq, center, r);
      REQUIRE(mass.has_value());
      const std::size_t n = 40000;
      const double mc = monte_carlo_mass(sq, center, r, n, rng);
      const double sigma = std::sqrt(std::max(*mass * (1.0 - *mass), 1e-6) / n);
      CHECK(std::abs(mc - *mass) <= 3.5 * sigma + 1e-12);
    }
  }
}

TEST_CASE("sphere cap mass matches Monte Carlo") {
  const WorldSpec sp = sphere(2, 3);
  const Point pole{0.0, 0.0, 1.0};
  auto rng = make_rng(8);
  for (double r : {0.3, 0.8, 1.5}) {
    const auto mass = true_ball_mass(sp, pole, r);
    REQUIRE(mass.has_value());
    const double expect = 0.5 * (1.0 - std::cos(2.0 * std::asin(r / 2.0)));
    CHECK(*mass == doctest::Approx(expect).epsilon(1e-12));
    const std::size_t n = 40000;
    const double mc = monte_carlo_mass(sp, pole, r, n, rng);
    const double sigma = std::sqrt(*mass * (1.0 - *mass) / n);
    CHECK(std::abs(mc - *mass) <= 3.5 * sigma + 1e-12);
  }
  CHECK(*true_ball_mass(sp, pole, 2.0) == 1.0);
}

TEST_CASE("doubling sanity: halving the radius divides mass by 2^d") {
  // interior points with power-of-two radii make the ratio exact
  const WorldSpec seg = hyperplane(1, 3);
  const double m1 = *true_ball_mass(seg, Point{0.5, 0, 0}, 0.25);
  const double m2 = *true_ball_mass(seg, Point{0.5, 0, 0}, 0.125);
  CHECK(m1 / m2 == 2.0);

  const WorldSpec sq = hyperplane(2, 2);
  const double q1 = *true_ball_mass(sq, Point{0.5, 0.5}, 0.25);
  const double q2 = *true_ball_mass(sq, Point{0.5, 0.5}, 0.125);
  CHECK(q1 / q2 == 4.0);

  const WorldSpec cube = hyperplane(3, 3);
  const double c1 = *true_ball_mass(cube, Point{0.5, 0.5, 0.5}, 0.25);
  const double c2 = *true_ball_mass(cube, Point{0.5, 0.5, 0.5}, 0.125);
  CHECK(c1 / c2 == 8.0);
}

TEST_CASE("d >= 3 masses are unavailable off the interior") {
  const WorldSpec cube = hyperplane(3, 3);
  CHECK_FALSE(true_ball_mass(cube, Point{0.05, 0.5, 0.5}, 0.2).has_value());
  CHECK(*true_ball_mass(cube, Point{0.5, 0.5, 0.5}, 10.0) == 1.0);
  // no analytic mass for the serpentine
  WorldSpec curve;
  curve.kind = WorldKind::curve_in_ambient;
  curve.d = 1;
  curve.D = 2;
  CHECK_FALSE(true_ball_mass(curve, Point{0.5, 0.0}, 0.1).has_value());
}

TEST_CASE("mass is monotone in the radius") {
  const WorldSpec sq = hyperplane(2, 2);
  const Point x{0.3, 0.7};
  double prev = 0.0;
  for (double r = 0.01; r < 2.0; r += 0.03) {
    const double m = *true_ball_mass(sq, x, r);
    CHECK(m >= prev - 1e-15);
    prev = m;
  }
}

TEST_CASE("rotation preserves masses and reconstruction is exact") {
  const WorldSpec rotated = hyperplane(2, 7, true, 1234);
  auto rng = make_rng(9);
  const auto pts = sample_points(rotated, 200, rng);

  // embedding exactness: intrinsic -> ambient round trip
  for (const auto& p : pts) {
    const auto intrinsic = intrinsic_coordinates(rotated, p);
    REQUIRE(intrinsic.size() == 2);
    const Point back = embed_intrinsic(rotated, intrinsic);
    for (std::size_t j = 0; j < p.size(); ++j) CHECK(std::abs(back[j] - p[j]) <= 1e-12);
  }

  // the analytic mass agrees with the unrotated world at matching points
  const WorldSpec flat = hyperplane(2, 7);
  for (int i = 0; i < 5; ++i) {
    const auto intrinsic = intrinsic_coordinates(rotated, pts[static_cast<std::size_t>(i)]);
    Point flat_point(7, 0.0);
    flat_point[0] = intrinsic[0];
    flat_point[1] = intrinsic[1];
    const auto a = true_ball_mass(rotated, pts[static_cast<std::size_t>(i)], 0.2);
    const auto b = true_ball_mass(flat, flat_point, 0.2);
    REQUIRE(a.has_value());
    REQUIRE(b.has_value());
    CHECK(*a == doctest::Approx(*b).epsilon(1e-12));
  }

  // rotation matrices are orthogonal: pairwise distances survive exactly
  const double d01 = metric_dist(Metric{}, pts[0], pts[1]);
  const auto i0 = intrinsic_coordinates(rotated, pts[0]);
  const auto i1 = intrinsic_coordinates(rotated, pts[1]);
  const double flat_d = std::sqrt((i0[0] - i1[0]) * (i0[0] - i1[0]) +
                                  (i0[1] - i1[1]) * (i0[1] - i1[1]));
  CHECK(d01 == doctest::Approx(flat_d).epsilon(1e-10));
}

TEST_CASE("local dimension estimation recovers d") {
  const std::vector<double> eps_grid{0.5, 0.6, 0.7, 0.8};

  SUBCASE("uniform segment in R^10") {
    auto rng = make_rng(10);
    const WorldSpec seg = hyperplane(1, 10);
    const TargetFunction f = make_world_target(seg, TargetKind::constant, 0.0);
    const Dataset ds = sample_world(seg, 10000, f, NoiseModel::none(), rng);
    Point q(10, 0.0);
    q[0] = 0.5;
    const auto est = estimate_local_dimension(ds, q, 0.1, eps_grid);  // ~20% of the mass
    REQUIRE(est.has_value());
    CHECK(est->d_hat >= 0.8);
    CHECK(est->d_hat <= 1.2);
    for (const auto& pair : est->mass_pairs) {
      CHECK(pair.inner_mass <= pair.outer_mass);
      CHECK(pair.outer_mass > 0.0);
    }
  }

  SUBCASE("uniform square in R^10") {
    auto rng = make_rng(11);
    const WorldSpec sq = hyperplane(2, 10);
    const TargetFunction f = make_world_target(sq, TargetKind::constant, 0.0);
    const Dataset ds = sample_world(sq, 10000, f, NoiseModel::none(), rng);
    Point q(10, 0.0);
    q[0] = 0.5;
    q[1] = 0.5;
    const auto est = estimate_local_dimension(ds, q, 0.25, eps_grid);
    REQUIRE(est.has_value());
    CHECK(est->d_hat >= 1.7);
    CHECK(est->d_hat <= 2.3);
  }

  SUBCASE("serpentine looks one-dimensional below the fold scale") {
    WorldSpec curve;
    curve.kind = WorldKind::curve_in_ambient;
    curve.d = 1;
    curve.D = 5;
    curve.curve_length = 8.0;
    curve.curve_pitch = 0.12;
    auto rng = make_rng(12);
    const TargetFunction f = make_world_target(curve, TargetKind::constant, 0.0);
    const Dataset ds = sample_world(curve, 20000, f, NoiseModel::none(), rng);
    Point q(5, 0.0);
    q[0] = 0.37;
    q[1] = 0.0;
    const auto est = estimate_local_dimension(ds, q, 0.04, eps_grid);  // below w = 0.12
    REQUIRE(est.has_value());
    CHECK(est->d_hat >= 0.7);
    CHECK(est->d_hat <= 1.3);
  }

  SUBCASE("degenerate inputs fail explicitly") {
    const Dataset ds({0.0, 0.0, 0.0}, {1, 1, 1}, 1);
    CHECK_FALSE(estimate_local_dimension(ds, Point{0.0}, 0.0, eps_grid).has_value());
    // query far away from every point: all masses zero
    CHECK_FALSE(estimate_local_dimension(ds, Point{100.0}, 0.5, eps_grid).has_value());
    CHECK_THROWS_AS(estimate_local_dimension(ds, Point{0.0}, 0.5, std::vector<double>{}),
                    std::invalid_argument);
    CHECK_THROWS_AS(estimate_local_dimension(ds, Point{0.0}, 0.5, std::vector<double>{1.5}),
                    std::invalid_argument);
  }
}

TEST_CASE("dimension estimate tightens with sample size") {
  const std::vector<double> eps_grid{0.5, 0.6, 0.7, 0.8};
  const WorldSpec seg = hyperplane(1, 6);
  const TargetFunction f = make_world_target(seg, TargetKind::constant, 0.0);
  Point q(6, 0.0);
  q[0] = 0.5;
  double err_small = 0.0, err_large = 0.0;
  {
    auto rng = make_rng(13);
    const Dataset ds = sample_world(seg, 500, f, NoiseModel::none(), rng);
    err_small = std::abs(estimate_local_dimension(ds, q, 0.1, eps_grid)->d_hat - 1.0);
  }
  {
    auto rng = make_rng(13);
    const Dataset ds = sample_world(seg, 20000, f, NoiseModel::none(), rng);
    err_large = std::abs(estimate_local_dimension(ds, q, 0.1, eps_grid)->d_hat - 1.0);
  }
  CHECK(err_large < err_small + 1e-12);
}

TEST_CASE("vc concentration check") {
  const WorldSpec seg = hyperplane(1, 3);
  const std::size_t n = 2048;
  const double delta = 0.05;
  const int vc_dim = 5;  // D + 2
  const double alpha = vc_alpha_n(n, delta, vc_dim);

  SUBCASE("a = 3 alpha_n sees no violations in practice") {
    auto rng = make_rng(14);
    const auto report = vc_concentration_check(seg, n, delta, vc_dim, 3.0 * alpha, 40, rng);
    CHECK(report.violations_forward == 0);
    CHECK(report.violations_backward == 0);
    CHECK(report.trials == 40);
    CHECK(report.balls_tested > 0);
  }

  SUBCASE("a = 1 makes both implications vacuous") {
    auto rng = make_rng(15);
    const auto report = vc_concentration_check(seg, n, delta, vc_dim, 1.0, 10, rng);
    CHECK(report.violations_forward == 0);
    CHECK(report.violations_backward == 0);
  }

  SUBCASE("violation rate at a = alpha_n stays within the guarantee") {
    auto rng = make_rng(16);
    const int trials = 60;
    const auto report = vc_concentration_check(seg, n, delta, vc_dim, alpha, trials, rng);
    const double slack = 3.0 * std::sqrt(delta * (1.0 - delta) / trials);
    CHECK(report.trial_violation_rate() <= delta + slack);
  }

  SUBCASE("input validation") {
    auto rng = make_rng(17);
    CHECK_THROWS_AS(vc_concentration_check(seg, n, delta, vc_dim, alpha / 2.0, 5, rng),
                    std::invalid_argument);
    WorldSpec curve;
    curve.kind = WorldKind::curve_in_ambient;
    curve.d = 1;
    curve.D = 2;
    CHECK_THROWS_AS(vc_concentration_check(curve, n, delta, vc_dim, 0.5, 5, rng),
                    std::invalid_argument);
  }
}

TEST_CASE("world targets pass the Lipschitz audit on support pairs") {
  auto rng = make_rng(18);
  const std::vector<WorldSpec> worlds = {hyperplane(1, 5), hyperplane(2, 6, true, 77),
                                         sphere(2, 4)};
  for (const WorldSpec& world : worlds) {
    auto pts_rng = make_rng(mix_seed(world.seed, world.rotate ? 1 : 0, world.d));
    const auto pts = sample_points(world, 2000, pts_rng);
    for (const TargetKind kind : {TargetKind::linear, TargetKind::zigzag, TargetKind::tent,
                                  TargetKind::sine, TargetKind::constant}) {
      const TargetFunction f = make_world_target(world, kind, 1.0);
      auto sample_pair = [&](std::mt19937_64& r) {
        const auto& a = pts[static_cast<std::size_t>(uniform01(r) * pts.size())];
        const auto& b = pts[static_cast<std::size_t>(uniform01(r) * pts.size())];
        return std::make_pair(a, b);
      };
      const double slope = empirical_lipschitz([&](const Point& p) { return f(p); }, Metric{},
                                               sample_pair, 10000, rng);
      CHECK(slope <= std::max(f.lipschitz_lambda, 0.0) * (1.0 + 1e-9) + 1e-15);
    }
  }
}

TEST_CASE("world spec serialization round trip") {
  WorldSpec curve;
  curve.kind = WorldKind::curve_in_ambient;
  curve.d = 1;
  curve.D = 8;
  curve.seed = 42;
  curve.rotate = true;
  curve.curve_length = 6.0;
  curve.curve_pitch = 0.125;

  WorldSpec mix;
  mix.kind = WorldKind::mixture;
  mix.d = 1;
  mix.D = 8;
  mix.components = {hyperplane(1, 8), curve};
  mix.mixture_weights = {0.25, 0.75};

  for (const WorldSpec& spec : {hyperplane(2, 5, true, 7), curve, mix}) {
    const std::string text = world_to_config_text(spec);
    const WorldSpec back = world_from_config_text(text);
    CHECK(back.kind == spec.kind);
    CHECK(back.d == spec.d);
    CHECK(back.D == spec.D);
    CHECK(back.seed == spec.seed);
    CHECK(back.rotate == spec.rotate);
    if (spec.kind == WorldKind::curve_in_ambient) {
      CHECK(back.curve_length == spec.curve_length);
      CHECK(back.curve_pitch == spec.curve_pitch);
    }
    if (spec.kind == WorldKind::mixture) {
      REQUIRE(back.components.size() == spec.components.size());
      CHECK(back.mixture_weights == spec.mixture_weights);
      CHECK(back.components[1].curve_pitch == curve.curve_pitch);
    }
    // samples drawn from the round-tripped spec are identical
    auto r1 = make_rng(5), r2 = make_rng(5);
    const auto p1 = sample_points(spec, 20, r1);
    const auto p2 = sample_points(back, 20, r2);
    for (std::size_t i = 0; i < p1.size(); ++i) CHECK(p1[i] == p2[i]);
  }

  CHECK_THROWS_AS(world_from_config_text("kind=unknown\nd=1\nD=2\n"), std::invalid_argument);
  CHECK_THROWS_AS(world_from_config_text("no equals sign"), std::invalid_argument);
  CHECK_THROWS_AS(world_from_config_text("d=1\nD=2\n"), std::invalid_argument);
}

TEST_CASE("world validation rejects malformed specs") {
  CHECK_THROWS_AS(validate_world(hyperplane(3, 2)), std::invalid_argument);
  CHECK_THROWS_AS(validate_world(sphere(2, 2)), std::invalid_argument);
  WorldSpec mix;
  mix.kind = WorldKind::mixture;
  mix.D = 3;
  mix.components = {hyperplane(1, 3)};
  mix.mixture_weights = {0.5};
  CHECK_THROWS_AS(validate_world(mix), std::invalid_argument);
}
