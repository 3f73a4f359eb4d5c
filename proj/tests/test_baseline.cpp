#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "qssm/baseline.hpp"
#include "qssm/targets.hpp"

using namespace qssm;
using qssm::testing::random_state;
using Catch::Approx;

TEST_CASE("prop_s1_closed_form") {
  REQUIRE(prop_s1_closed_form(0.0) == Approx(8.0 / 9.0).margin(1e-12));
  REQUIRE(prop_s1_closed_form(1.0) == Approx(8.0 / 9.0).margin(1e-12));
  REQUIRE(prop_s1_closed_form(0.5) == Approx(2.0 / 3.0).margin(1e-12));
  double lo = 1e9, hi = -1e9;
  for (int i = 0; i <= 100000; ++i) {
    const double v = prop_s1_closed_form(i / 100000.0);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  REQUIRE(lo == Approx(16.0 / 27.0).margin(1e-6));
  REQUIRE(hi == Approx(8.0 / 9.0).margin(1e-12));
  REQUIRE_THROWS_AS(prop_s1_closed_form(-0.1), std::invalid_argument);
  REQUIRE_THROWS_AS(prop_s1_closed_form(1.1), std::invalid_argument);
}

TEST_CASE("last_cut_top_weight") {
  REQUIRE(last_cut_top_weight(ghz(4)) == Approx(0.5).margin(1e-12));
  REQUIRE(last_cut_top_weight(zero_state(4)) == Approx(1.0).margin(1e-12));
}

TEST_CASE("purification carrier reproduces the prefix reduction") {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const int n = 5;
    const auto target = random_state(n, 4000 + seed);
    for (int k = 2; k <= n; ++k) {
      const int w = width_schedule(n, k, n);  // uncapped: full-rank carrier fits
      const auto carrier = purification_prefix_carrier(target, k, w);
      REQUIRE(carrier.n == k - 1 + w);
      REQUIRE(is_normalized(carrier));
      const Mat a = partial_trace_keep_prefix(carrier, k - 1).mat;
      const Mat b = partial_trace_keep_prefix(target, k - 1).mat;
      REQUIRE((a - b).cwiseAbs().maxCoeff() < 1e-9);
    }
  }
  const auto first = purification_prefix_carrier(ghz(4), 1, 2);
  REQUIRE(first.n == 2);
  REQUIRE(std::abs(first.amp[0] - cplx(1, 0)) < 1e-15);
}

TEST_CASE("last-step gradient samples reproduce the GHZ closed form") {
  const auto target = ghz(4);
  const int samples = 4000;
  auto point = collect_variance_point(
      [&](std::mt19937_64& rng) { return sample_gradient_qssm(target, 4, 1, rng); },
      samples, 0xFACED, 2);
  REQUIRE(std::abs(point.mean) <= 3.0 * point.stderr_mean());
  REQUIRE(point.variance == Approx(2.0 / 3.0).epsilon(0.10));
}

TEST_CASE("last-step variance sits inside the closed-form band") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto target = random_state(4, 5000 + seed);
    auto point = collect_variance_point(
        [&](std::mt19937_64& rng) { return sample_gradient_qssm(target, 4, 1, rng); },
        3000, 6000 + seed, 2);
    const double c1 = last_cut_top_weight(target);
    REQUIRE(point.variance == Approx(prop_s1_closed_form(c1)).epsilon(0.15));
    REQUIRE(point.variance > 16.0 / 27.0 * 0.85);
    REQUIRE(point.variance < 8.0 / 9.0 * 1.15);
  }
}

TEST_CASE("global gradient variance shrinks with register count") {
  const int samples = 400;
  double var4 = 0.0, var8 = 0.0;
  {
    auto p = collect_variance_point(
        [t = ghz(4)](std::mt19937_64& rng) { return sample_gradient_global(t, rng); },
        samples, 0xAB, 2);
    REQUIRE(std::abs(p.mean) <= 4.0 * p.stderr_mean());
    var4 = p.variance;
  }
  {
    auto p = collect_variance_point(
        [t = ghz(8)](std::mt19937_64& rng) { return sample_gradient_global(t, rng); },
        samples, 0xCD, 2);
    var8 = p.variance;
  }
  REQUIRE(var8 < var4);
  std::mt19937_64 rng(1);
  REQUIRE_THROWS_AS(sample_gradient_global(haar_random_state(13, 1), rng),
                    std::length_error);
}

TEST_CASE("middle-step variance halves when the layer gains a register") {
  // GHZ keeps the reduced-state spectrum fixed across widths, isolating the
  // 2^{-width} scaling of the variance.
  const auto target = ghz(6);
  auto variance_w = [&](int w) {
    return collect_variance_point(
               [&, w](std::mt19937_64& rng) { return sample_gradient_qssm(target, 3, w, rng); },
               4000, 0xEE00 + w, 2)
        .variance;
  };
  double prev = variance_w(1);
  for (int w = 2; w <= 4; ++w) {
    const double cur = variance_w(w);
    const double ratio = prev / cur;
    INFO("width " << w << " ratio " << ratio);
    REQUIRE(ratio > 1.5);
    REQUIRE(ratio < 3.0);
    prev = cur;
  }
}

TEST_CASE("gradient means are statistically zero across repetitions") {
  const auto target = ghz(4);
  int within = 0;
  const int reps = 20, samples = 200;
  for (int rep = 0; rep < reps; ++rep) {
    auto p = collect_variance_point(
        [&](std::mt19937_64& rng) { return sample_gradient_qssm(target, 2, 2, rng); },
        samples, 0x33000 + rep, 2);
    if (std::abs(p.mean) <= 3.0 * p.stderr_mean()) ++within;
  }
  REQUIRE(within >= 18);  // 3-sigma band should hold ~99.7% of the time
}

TEST_CASE("variance experiment runner shapes and determinism") {
  VarianceExperimentConfig cfg;
  cfg.family = "ghz";
  cfg.n_values = {4, 6};
  cfg.steps = {StepSelector::First, StepSelector::Last};
  cfg.samples = 50;
  cfg.seed = 5;
  cfg.w_max = 2;
  cfg.threads = 2;
  auto make = [](int n) { return ghz(n); };
  auto points = run_variance_experiment(cfg, make);
  REQUIRE(points.size() == 4);
  for (const auto& p : points) {
    REQUIRE(p.variance >= 0.0);
    REQUIRE(p.samples == 50);
  }
  cfg.threads = 1;  // sample streams are indexed, so thread count is immaterial
  auto again = run_variance_experiment(cfg, make);
  for (std::size_t i = 0; i < points.size(); ++i) {
    REQUIRE(points[i].mean == again[i].mean);
    REQUIRE(points[i].variance == again[i].variance);
  }
  cfg.samples = 1;
  REQUIRE_THROWS_AS(run_variance_experiment(cfg, make), std::invalid_argument);
}

TEST_CASE("train_global_qnn learns small targets") {
  TrainConfig cfg;
  cfg.depth = 20;
  cfg.learning_rate = 0.1;
  cfg.max_iters = 200;
  cfg.cost_tolerance = 1e-9;
  cfg.seed = 3;
  auto res = train_global_qnn(ghz(2), cfg);
  REQUIRE(res.fidelity >= 0.99);

  TrainConfig quick = cfg;
  quick.depth = 2;
  quick.max_iters = 120;
  auto triv = train_global_qnn(zero_state(2), quick);
  REQUIRE(triv.fidelity >= 0.99);
}

TEST_CASE("haar moment identities at reduced sample counts") {
  for (int d : {2, 4}) {
    const auto checks = haar_moment_checks(d, 20000, 0xFEED + d, 2);
    REQUIRE(checks.size() == 3);
    for (const auto& c : checks) REQUIRE(c.rel_error < 0.05);
  }
}
