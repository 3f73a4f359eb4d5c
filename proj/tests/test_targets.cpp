#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "helpers.hpp"
#include "qssm/targets.hpp"

using namespace qssm;
using Catch::Approx;

namespace {

// Dense Heisenberg Hamiltonian, the diagonalization oracle for Lanczos.
Eigen::MatrixXd dense_heisenberg(int n, double delta) {
  const std::int64_t d = dim_of(n);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d, d);
  for (int i = 1; i < n; ++i) {
    const std::int64_t mi = std::int64_t{1} << (n - i);
    const std::int64_t mj = std::int64_t{1} << (n - i - 1);
    for (std::int64_t x = 0; x < d; ++x) {
      const bool bi = x & mi, bj = x & mj;
      h(x, x) += (bi == bj) ? delta : -delta;
      if (bi != bj) h(x ^ mi ^ mj, x) += 2.0;
    }
  }
  return h;
}

}  // namespace

TEST_CASE("ghz") {
  auto g2 = ghz(2);
  REQUIRE(g2.amp[0].real() == Approx(1.0 / std::sqrt(2.0)).margin(1e-15));
  REQUIRE(g2.amp[3].real() == Approx(1.0 / std::sqrt(2.0)).margin(1e-15));
  REQUIRE(std::abs(g2.amp[1]) + std::abs(g2.amp[2]) == 0.0);

  auto rs = rank_sequence(ghz(6), 1e-10);
  REQUIRE(rs.ranks == std::vector<int>{2, 2, 2, 2, 2, 1});
  REQUIRE(fidelity_pure(ghz(3), ghz(3)) == Approx(1.0).margin(1e-12));
  REQUIRE_THROWS_AS(ghz(1), std::invalid_argument);
}

TEST_CASE("heisenberg two-register closed forms") {
  auto xxx = heisenberg_ground(2, 1.0);
  REQUIRE(xxx.energy == Approx(-3.0).margin(1e-9));
  // singlet (|01> - |10>)/sqrt(2) up to phase
  REQUIRE(std::abs(xxx.state.amp[1]) == Approx(1.0 / std::sqrt(2.0)).margin(1e-8));
  REQUIRE(std::abs(xxx.state.amp[2]) == Approx(1.0 / std::sqrt(2.0)).margin(1e-8));
  REQUIRE(std::abs(xxx.state.amp[1] + xxx.state.amp[2]) < 1e-8);

  auto xx = heisenberg_ground(2, 0.0);
  REQUIRE(xx.energy == Approx(-2.0).margin(1e-9));
}

TEST_CASE("Lanczos agrees with dense diagonalization") {
  for (int n : {3, 4, 6, 8}) {
    for (double delta : {1.0, 0.5}) {
      auto g = heisenberg_ground(n, delta);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense_heisenberg(n, delta),
                                                        Eigen::EigenvaluesOnly);
      REQUIRE(g.energy == Approx(es.eigenvalues()(0)).margin(1e-8));
      REQUIRE(g.residual < 1e-8);
      REQUIRE(is_normalized(g.state));
    }
  }
}

TEST_CASE("heisenberg_ground is deterministic") {
  auto a = heisenberg_ground(5, 1.0);
  auto b = heisenberg_ground(5, 1.0);
  REQUIRE((a.state.amp - b.state.amp).norm() == 0.0);
  REQUIRE_THROWS_AS(heisenberg_ground(1, 1.0), std::invalid_argument);
  REQUIRE_THROWS_AS(heisenberg_ground(15, 1.0), std::invalid_argument);
}

TEST_CASE("gaussian_state") {
  const int n = 4;
  const double mu = (dim_of(n) - 1) / 2.0;
  auto s = gaussian_state(n, mu, 2.0);
  for (std::int64_t x = 0; x < s.dim(); ++x) {
    REQUIRE(s.amp[x].real() > 0.0);
    REQUIRE(s.amp[x].real() ==
            Approx(s.amp[s.dim() - 1 - x].real()).margin(1e-12));
  }
  // probabilities match the normalized discretized density
  double z = 0.0;
  std::vector<double> pmf(s.dim());
  for (std::int64_t x = 0; x < s.dim(); ++x) {
    pmf[x] = std::exp(-(x - mu) * (x - mu) / (2.0 * 2.0 * 2.0));
    z += pmf[x];
  }
  for (std::int64_t x = 0; x < s.dim(); ++x)
    REQUIRE(std::norm(s.amp[x]) == Approx(pmf[x] / z).margin(1e-12));

  // very wide Gaussians approach the uniform state
  auto wide = gaussian_state(4, mu, 64.0);
  Vec uniform = Vec::Constant(16, 0.25);
  auto u = state_from_amplitudes(4, std::move(uniform));
  REQUIRE(fidelity_pure(wide, u) >= 0.99);

  REQUIRE_THROWS_AS(gaussian_state(3, 0.0, 0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(gaussian_state(3, 0.0, -1.0), std::invalid_argument);
}

TEST_CASE("haar_random_state") {
  auto s = haar_random_state(6, 123);
  REQUIRE(s.norm() == Approx(1.0).margin(1e-12));
  auto s2 = haar_random_state(6, 123);
  REQUIRE((s.amp - s2.amp).norm() == 0.0);

  // full Schmidt rank at the middle cut, for a few seeds and sizes
  for (int n : {4, 6, 8, 10}) {
    auto r = haar_random_state(n, 1000 + n);
    auto rs = rank_sequence(r, 1e-10);
    REQUIRE(rs.ranks[n / 2 - 1] == (1 << (n / 2)));
  }

  // different seeds give far-apart states
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto a = haar_random_state(5, 2000 + seed);
    auto b = haar_random_state(5, 3000 + seed);
    REQUIRE(fidelity_pure(a, b) < 0.5);
  }
  REQUIRE_THROWS_AS(haar_random_state(15, 1), std::length_error);
}

TEST_CASE("load_target") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "qssm_targets";
  fs::create_directories(dir);

  {
    std::ofstream f(dir / "flat.csv");
    f << "1\n1\n1\n1\n";
  }
  auto flat = load_target((dir / "flat.csv").string(), 2);
  for (int i = 0; i < 4; ++i) REQUIRE(flat.amp[i].real() == Approx(0.5).margin(1e-12));

  {
    std::ofstream f(dir / "short.csv");
    f << "1\n1\n1\n";
  }
  auto padded = load_target((dir / "short.csv").string(), 2);
  REQUIRE(std::abs(padded.amp[3]) == 0.0);
  REQUIRE(padded.norm() == Approx(1.0).margin(1e-12));

  {
    std::ofstream f(dir / "bad.csv");
    f << "0.3\noops\n";
  }
  REQUIRE_THROWS_WITH(load_target((dir / "bad.csv").string()),
                      Catch::Matchers::ContainsSubstring("line 2"));

  {
    std::ofstream f(dir / "zero.csv");
    f << "0\n0\n";
  }
  REQUIRE_THROWS_AS(load_target((dir / "zero.csv").string()), std::domain_error);

  {
    std::ofstream f(dir / "raw.json");
    f << "[1, 2, 2, 0, 0, 4]";
  }
  auto raw = load_target((dir / "raw.json").string(), 3);
  REQUIRE(raw.n == 3);
  REQUIRE(raw.amp[1].real() == Approx(0.4).margin(1e-12));
  REQUIRE(std::abs(raw.amp[7]) == 0.0);
}

TEST_CASE("make_target dispatch") {
  TargetSpec spec;
  spec.family = "ghz";
  spec.n = 3;
  REQUIRE(fidelity_pure(make_target(spec), ghz(3)) == Approx(1.0).margin(1e-12));
  spec.family = "nope";
  REQUIRE_THROWS_AS(make_target(spec), std::invalid_argument);
}
