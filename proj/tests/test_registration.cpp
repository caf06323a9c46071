#include <doctest.h>

#include <omp.h>

#include <cmath>

#include "kreg/errors.hpp"
#include "kreg/eval.hpp"
#include "kreg/registration.hpp"
#include "test_helpers.hpp"

using namespace kreg;

namespace {

RegistrationConfig fast_config(double init_l, double min_l) {
  RegistrationConfig config;
  config.init_lengthscale = init_l;
  config.min_lengthscale = min_l;
  config.subsequent_lengthscale = init_l;
  config.stabilization_window = 3;
  config.max_iterations = 600;
  return config;
}

bool traces_equal(const RegistrationResult& a, const RegistrationResult& b) {
  return a.objective_trace == b.objective_trace && a.indicator_trace == b.indicator_trace &&
         a.lengthscale_trace == b.lengthscale_trace && a.step_trace == b.step_trace &&
         a.twist_norm_trace == b.twist_norm_trace &&
         (a.transform.matrix() - b.transform.matrix()).cwiseAbs().maxCoeff() == 0.0;
}

}  // namespace

TEST_CASE("config invariants are enforced") {
  RegistrationConfig config;
  config.decay_factor = 1.5;
  CHECK_THROWS_WITH_AS(check_config(config), doctest::Contains("decay_factor"),
                       std::invalid_argument);
  config = RegistrationConfig{};
  config.min_lengthscale = 2.0 * config.init_lengthscale;
  CHECK_THROWS_AS(check_config(config), std::invalid_argument);
  config = RegistrationConfig{};
  config.max_iterations = 0;
  CHECK_THROWS_AS(check_config(config), std::invalid_argument);
  CHECK_NOTHROW(check_config(RegistrationConfig{}));
}

TEST_CASE("anneal_step decays by exactly the configured factor") {
  RegistrationConfig config;
  config.stabilization_window = 5;
  config.stabilization_rel_tol = 1e-5;
  config.min_lengthscale = 0.01;

  SUBCASE("stable history decays") {
    const std::vector<double> history(8, 0.73);
    const double next = anneal_step(0.5, history, config);
    CHECK(next == 0.5 * 0.98);
  }
  SUBCASE("short history does not decay") {
    const std::vector<double> history(4, 0.73);
    CHECK(anneal_step(0.5, history, config) == 0.5);
  }
  SUBCASE("oscillating history does not decay") {
    std::vector<double> history = {0.7, 0.8, 0.7, 0.8, 0.7, 0.8};
    CHECK(anneal_step(0.5, history, config) == 0.5);
  }
  SUBCASE("a decay that would cross the floor is skipped") {
    const std::vector<double> history(8, 0.73);
    CHECK(anneal_step(0.01, history, config) == 0.01);
    CHECK(anneal_step(0.0101, history, config) == 0.0101);  // 0.98x would land below
  }
}

TEST_CASE("line_search increases the objective on an ascent direction") {
  const PointCloud X(std::vector<Eigen::Vector3d>{{0, 0, 0}});
  const PointCloud Z(std::vector<Eigen::Vector3d>{{0.3, 0, 0}});
  KernelParams params;
  params.lengthscale = 0.5;
  RegistrationConfig config;
  const PairList pairs = build_pairs(X, Z, Isometry::Identity(), params, 10.0, 0.0);
  const Twist g = gradient(pairs, X, Z, Isometry::Identity(), params);
  REQUIRE(g.norm() > 0.0);

  const double eps = line_search(X, Z, Isometry::Identity(), g, params, pairs, config);
  REQUIRE(eps > 0.0);
  const Isometry stepped = compose(exp(g.scaled(eps / g.norm())), Isometry::Identity());
  CHECK(inner_product(pairs, X, Z, stepped, params) >
        inner_product(pairs, X, Z, Isometry::Identity(), params));
}

TEST_CASE("line_search returns 0 at a maximum and rejects a zero gradient") {
  // perfectly aligned single pair: any move decreases F
  const PointCloud C(std::vector<Eigen::Vector3d>{{0.1, 0.2, 0.3}});
  KernelParams params;
  params.lengthscale = 0.5;
  RegistrationConfig config;
  const PairList pairs = build_pairs(C, C, Isometry::Identity(), params, 10.0, 0.0);

  Twist fake;  // nonzero direction, but there is no ascent anywhere
  fake.v = Eigen::Vector3d(1, 0, 0);
  CHECK(line_search(C, C, Isometry::Identity(), fake, params, pairs, config) == 0.0);
  CHECK_THROWS_AS(line_search(C, C, Isometry::Identity(), Twist::Zero(), params, pairs, config),
                  std::invalid_argument);
}

TEST_CASE("accepted line-search steps always satisfy the ascent contract") {
  SplitMix64 rng(99);
  RegistrationConfig config;
  int accepted = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const PointCloud X = test::random_labeled_cloud(5000 + trial, 12, 1.0, false);
    const PointCloud Z = test::random_labeled_cloud(6000 + trial, 12, 1.0, false);
    const Isometry T = test::random_isometry(rng, 0.3, 0.2);
    KernelParams params;
    params.lengthscale = rng.uniform(0.1, 0.6);
    const PairList pairs = build_pairs(X, Z, T, params, 20.0, 0.0);
    const Evaluation ev = objective_and_gradient(pairs, X, Z, T, params);
    if (!(ev.grad.norm() > 0.0)) continue;

    const double eps = line_search(X, Z, T, ev.grad, params, pairs, config);
    if (eps == 0.0) continue;
    ++accepted;
    const Isometry stepped = compose(exp(ev.grad.scaled(eps / ev.grad.norm())), T);
    CHECK(inner_product(pairs, X, Z, stepped, params) > ev.value);
  }
  CHECK(accepted > 500);  // the property must actually have been exercised
}

TEST_CASE("registering a cloud with itself returns the identity immediately") {
  const PointCloud C = test::random_labeled_cloud(123, 150, 1.0, true);
  const KernelParams params = test::params_for(C, 0.2, 0.3);
  RegistrationConfig config = fast_config(0.2, 0.2);  // floor active from the start

  const RegistrationResult res =
      register_clouds(C, C, Isometry::Identity(), params, config);
  CHECK(res.converged);
  CHECK((res.transform.rotation - Eigen::Matrix3d::Identity()).norm() <= 1e-8);
  CHECK(res.transform.translation.norm() <= 1e-8);

  const double direct = indicator(C, C, Isometry::Identity(),
                                  params.with_lengthscale(config.init_lengthscale),
                                  config.cutoff_multiplier, config.c_min);
  CHECK(std::abs(res.final_indicator - direct) <= 1e-6);
}

TEST_CASE("recovers a known rigid motion on a box cloud") {
  const PointCloud X = make_box_cloud(2024, 500, false);
  const double diam = diameter(X);
  SplitMix64 rng(11);
  Twist gt;
  gt.omega = Eigen::Vector3d(rng.gaussian(), rng.gaussian(), rng.gaussian()).normalized() *
             (5.0 * M_PI / 180.0);
  const Isometry T_star = [&] {
    Isometry t = exp(gt);
    t.translation = 0.05 * diam *
                    Eigen::Vector3d(rng.gaussian(), rng.gaussian(), rng.gaussian()).normalized();
    return t;
  }();
  const PointCloud Z = transform_cloud(inverse(T_star), X);

  KernelParams params;
  const RegistrationConfig config = fast_config(0.12, 0.08);
  const RegistrationResult res =
      register_clouds(X, Z, Isometry::Identity(), params, config);

  const Isometry err = compose(inverse(res.transform), T_star);
  CHECK(rotation_angle(err) <= 0.5 * M_PI / 180.0);
  CHECK(translation_norm(err) <= 0.01 * diam);
}

TEST_CASE("colors disambiguate a rotationally symmetric ring") {
  const int sectors = 8;
  const PointCloud ring = make_ring_cloud(55, sectors, 30, true);
  Twist gt;
  gt.omega = Eigen::Vector3d(0, 0, 30.0 * M_PI / 180.0);  // past the 22.5 deg watershed
  const Isometry T_star = exp(gt);
  const PointCloud Z = transform_cloud(inverse(T_star), ring);

  const RegistrationConfig config = fast_config(0.5, 0.1);
  KernelParams color_params = test::params_for(ring, 0.5, 0.2);

  // geometric-only: same positions, schema stripped
  const PointCloud ring_geo(ring.positions());
  const PointCloud z_geo(Z.positions());
  KernelParams geo_params;

  const RegistrationResult with_color =
      register_clouds(ring, Z, Isometry::Identity(), color_params, config);
  const RegistrationResult geometric =
      register_clouds(ring_geo, z_geo, Isometry::Identity(), geo_params, config);

  const double color_err = rotation_angle(compose(inverse(with_color.transform), T_star));
  const double geo_err = rotation_angle(compose(inverse(geometric.transform), T_star));
  CHECK(color_err < 0.5 * M_PI / 180.0);
  CHECK(geo_err > 5.0 * M_PI / 180.0);  // aliased to a symmetry rotation

  // under the color-aware kernel, the true optimum scores above every alias
  const KernelParams scoring = color_params.with_lengthscale(config.min_lengthscale);
  const double at_truth = indicator(ring, Z, T_star, scoring);
  for (int k = 1; k < sectors; ++k) {
    Twist alias;
    alias.omega = Eigen::Vector3d(0, 0, 2.0 * M_PI * k / sectors);
    const Isometry aliased = compose(exp(alias), T_star);
    CHECK(at_truth > indicator(ring, Z, aliased, scoring));
  }
}

TEST_CASE("trace invariants: annealing exactness, ascent, equal lengths") {
  const PointCloud X = make_box_cloud(31, 400, false);
  SplitMix64 rng(32);
  Twist gt = test::random_twist(rng, 8.0 * M_PI / 180.0, 0.04);
  const PointCloud Z = transform_cloud(inverse(exp(gt)), X);
  KernelParams params;
  const RegistrationConfig config = fast_config(0.15, 0.06);
  const RegistrationResult res = register_clouds(X, Z, Isometry::Identity(), params, config);

  const size_t n = static_cast<size_t>(res.iterations);
  REQUIRE(n > 0);
  CHECK(res.objective_trace.size() == n);
  CHECK(res.indicator_trace.size() == n);
  CHECK(res.lengthscale_trace.size() == n);
  CHECK(res.step_trace.size() == n);
  CHECK(res.twist_norm_trace.size() == n);
  CHECK(res.pair_count_trace.size() == n);
  CHECK(res.rebuild_trace.size() == n);

  // every lengthscale decrease is exactly one decay factor, never below floor
  int decays = 0;
  for (size_t i = 1; i < n; ++i) {
    const double prev = res.lengthscale_trace[i - 1];
    const double cur = res.lengthscale_trace[i];
    CHECK(cur <= prev);
    if (cur != prev) {
      CHECK(cur == prev * config.decay_factor);
      ++decays;
    }
    CHECK(cur >= config.min_lengthscale);
  }
  CHECK(decays > 5);

  // decays happen only after the stabilization window held; replay the rule
  {
    std::vector<double> window;
    for (size_t i = 0; i + 1 < n; ++i) {
      window.push_back(res.indicator_trace[i]);
      if (res.lengthscale_trace[i + 1] != res.lengthscale_trace[i]) {
        REQUIRE(window.size() >= static_cast<size_t>(config.stabilization_window));
        double lo = window.back(), hi = window.back(), scale = std::abs(window.back());
        for (size_t w = window.size() - static_cast<size_t>(config.stabilization_window);
             w < window.size(); ++w) {
          lo = std::min(lo, window[w]);
          hi = std::max(hi, window[w]);
          scale = std::max(scale, std::abs(window[w]));
        }
        CHECK(hi - lo <= config.stabilization_rel_tol * scale);
        window.clear();
      }
    }
  }

  // ascent within a fixed lengthscale and pair-list epoch
  for (size_t i = 1; i < n; ++i) {
    if (res.lengthscale_trace[i] == res.lengthscale_trace[i - 1] && !res.rebuild_trace[i]) {
      CHECK(res.objective_trace[i] >= res.objective_trace[i - 1]);
    }
  }
}

TEST_CASE("repeated runs and different thread counts give bitwise-identical results") {
  const PointCloud X = make_box_cloud(71, 300, false);
  SplitMix64 rng(72);
  const PointCloud Z = transform_cloud(inverse(test::random_isometry(rng, 0.08, 0.03)), X);
  KernelParams params;
  const RegistrationConfig config = fast_config(0.15, 0.09);

  const RegistrationResult a = register_clouds(X, Z, Isometry::Identity(), params, config);
  const RegistrationResult b = register_clouds(X, Z, Isometry::Identity(), params, config);
  CHECK(traces_equal(a, b));

  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const RegistrationResult c = register_clouds(X, Z, Isometry::Identity(), params, config);
  omp_set_num_threads(saved);
  CHECK(traces_equal(a, c));
}

TEST_CASE("no kernel overlap raises an error naming the cutoff") {
  const PointCloud a(std::vector<Eigen::Vector3d>{{0, 0, 0}});
  const PointCloud b(std::vector<Eigen::Vector3d>{{1000, 0, 0}});
  KernelParams params;
  const RegistrationConfig config = fast_config(0.1, 0.05);
  try {
    register_clouds(a, b, Isometry::Identity(), params, config);
    FAIL("expected NoOverlapError");
  } catch (const NoOverlapError& e) {
    CHECK(e.cutoff_radius() == doctest::Approx(0.3));
    CHECK(std::string(e.what()).find("cutoff") != std::string::npos);
  }
}

TEST_CASE("schema mismatch is rejected up front") {
  const PointCloud plain = make_box_cloud(1, 20, false);
  const PointCloud colored = make_box_cloud(2, 20, true);
  KernelParams params;
  CHECK_THROWS_WITH_AS(
      register_clouds(plain, colored, Isometry::Identity(), params, RegistrationConfig{}),
      doctest::Contains("schema"), std::invalid_argument);
}

TEST_CASE("register_sequence on identical frames returns identity motion") {
  const PointCloud frame = make_box_cloud(91, 200, false);
  const std::vector<PointCloud> frames = {frame, frame, frame};
  KernelParams params;
  const RegistrationConfig config = fast_config(0.15, 0.15);

  const SequenceResult seq = register_sequence(frames, params, config);
  REQUIRE(seq.relative.size() == 2);
  REQUIRE(seq.trajectory.size() == 3);
  for (const Isometry& rel : seq.relative) {
    CHECK(rotation_angle(rel) <= 1e-8);
    CHECK(translation_norm(rel) <= 1e-8);
  }
  CHECK(seq.fallback == std::vector<uint8_t>({0, 0}));
}

TEST_CASE("register_sequence tracks constant motion") {
  const PointCloud base = make_box_cloud(101, 500, false);
  const double diam = diameter(base);
  Twist step;
  step.omega = Eigen::Vector3d(0, 0, 3.0 * M_PI / 180.0);
  step.v = Eigen::Vector3d(0.02 * diam, 0, 0);
  const Isometry motion = exp(step);

  // camera moves by `motion` between frames: frame k sees base at motion^-k
  std::vector<PointCloud> frames = {base};
  Isometry pose = Isometry::Identity();
  for (int k = 1; k < 4; ++k) {
    pose = compose(pose, motion);
    frames.push_back(transform_cloud(inverse(pose), base));
  }

  KernelParams params;
  const RegistrationConfig config = fast_config(0.12, 0.08);
  const SequenceResult seq = register_sequence(frames, params, config);

  Isometry expected = Isometry::Identity();
  for (size_t k = 0; k < 3; ++k) expected = compose(expected, motion);
  const Isometry err = compose(inverse(seq.trajectory.back()), expected);
  CHECK(rotation_angle(err) <= 2.0 * 0.5 * M_PI / 180.0);
  CHECK(translation_norm(err) <= 2.0 * 0.01 * diam);
}

TEST_CASE("an empty frame falls back to the previous motion and is flagged") {
  const PointCloud base = make_box_cloud(111, 150, false);
  const PointCloud empty;
  const std::vector<PointCloud> frames = {base, base, empty, base};
  KernelParams params;
  const RegistrationConfig config = fast_config(0.15, 0.15);

  const SequenceResult seq = register_sequence(frames, params, config);
  REQUIRE(seq.relative.size() == 3);
  CHECK(seq.fallback[0] == 0);
  CHECK(seq.fallback[1] == 1);
  CHECK(seq.fallback[2] == 1);  // base vs empty fails in both orders
  CHECK(seq.trajectory.size() == 4);
}

TEST_CASE("register_sequence needs at least two frames") {
  const PointCloud base = make_box_cloud(121, 50, false);
  KernelParams params;
  CHECK_THROWS_AS(register_sequence(std::vector<PointCloud>{base}, params, RegistrationConfig{}),
                  std::invalid_argument);
}
