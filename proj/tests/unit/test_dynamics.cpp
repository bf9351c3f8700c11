#include <doctest.h>

#include <fiq/dynamics.hpp>
#include <fiq/errors.hpp>

#include <algorithm>
#include <cmath>

using namespace fiq;

namespace {

SdeConfig small_config(std::uint64_t seed = 3) {
  SdeConfig c;
  c.outer = 1024;
  c.inner = 16;
  c.seed = seed;
  c.bootstrap = 100;
  return c;
}

double bounded_x(double x) { return x / std::sqrt(1.0 + x * x); }

}  // namespace

TEST_CASE("drift and diffusion of the weighted dynamics") {
  // cauchy(alpha), omega^2 = 1 + x^2: V' = (alpha + 1) x / (1 + x^2), so b = 2x - (alpha + 1) x.
  for (double a : {1.0, 2.0, 4.0, 8.0}) {
    const SdeFields F(Measure::cauchy(a), Weight::cauchy_optimal());
    for (double x : {-30.0, -1.5, 0.0, 0.3, 7.0}) {
      CHECK(std::abs(F.drift(x) - (1.0 - a) * x) <= 1e-10 * std::max(1.0, std::abs(a * x)));
      CHECK(F.diffusion(x) == doctest::Approx(std::sqrt(2.0 * (1.0 + x * x))).epsilon(1e-14));
    }
  }
  const SdeFields G(Measure::gaussian(1), Weight::unit());
  CHECK(G.drift(1.25) == doctest::Approx(-1.25).epsilon(1e-14));
  CHECK(G.diffusion(1.25) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  // Without the weight gradient the cauchy(4) drift is -5x.
  const SdeFields N(Measure::cauchy(4.0), Weight::cauchy_optimal(), true);
  CHECK(N.drift(2.0) == doctest::Approx(-10.0).epsilon(1e-12));
}

TEST_CASE("constant observables have zero variance") {
  const auto traj = simulate(Measure::cauchy(4.0), Weight::cauchy_optimal(), [](double) { return 2.0; }, small_config());
  REQUIRE(traj.times.size() == 21);
  for (std::size_t k = 0; k < traj.var.size(); ++k) {
    CHECK(traj.var[k] == 0.0);
    CHECK(traj.ci[k] == 0.0);
    if (k > 0) CHECK(traj.times[k] > traj.times[k - 1]);
  }
}

TEST_CASE("simulation is reproducible by seed") {
  auto c = small_config(9);
  c.outer = 64;
  c.horizon = 0.1;
  const auto a = simulate(Measure::gaussian(1), Weight::unit(), [](double x) { return x; }, c);
  const auto b = simulate(Measure::gaussian(1), Weight::unit(), [](double x) { return x; }, c);
  CHECK(a.var == b.var);
  CHECK(a.ci == b.ci);
  c.seed = 10;
  const auto d = simulate(Measure::gaussian(1), Weight::unit(), [](double x) { return x; }, c);
  CHECK(a.var != d.var);
}

TEST_CASE("Ornstein-Uhlenbeck variance decays at rate 2") {
  const auto traj = simulate(Measure::gaussian(1), Weight::unit(), [](double x) { return x; }, small_config());
  CHECK(std::abs(traj.fitted_rate - 2.0) <= 0.2);
  CHECK(check_decay(traj, 1.0).pass);
  // Halving dt moves the fitted rate by less than its statistical spread.
  auto c = small_config();
  c.dt = 2e-3;
  const auto coarse = simulate(Measure::gaussian(1), Weight::unit(), [](double x) { return x; }, c);
  CHECK(std::abs(coarse.fitted_rate - traj.fitted_rate) <= 0.05 * traj.fitted_rate);
  // Non-increasing up to 3 CI.
  for (std::size_t k = 1; k < traj.var.size(); ++k) CHECK(traj.var[k] <= traj.var[k - 1] + 3 * traj.ci[k]);
}

TEST_CASE("weighted cauchy dynamics decay at the weighted Poincare rate") {
  const auto traj = simulate(Measure::cauchy(4.0), Weight::cauchy_optimal(), bounded_x, small_config());
  const auto check = check_decay(traj, 1.0 / 3.0);
  CHECK(check.pass);
  CHECK(check.predicted_rate == doctest::Approx(6.0));
  CHECK(traj.fitted_rate > 5.0);
  CHECK(check_decay(traj, INFINITY).pass);

  // Unweighted cauchy dynamics are slow: a tiny constant is refuted.
  const auto slow = simulate(Measure::cauchy(4.0), Weight::unit(), bounded_x, small_config());
  CHECK_FALSE(check_decay(slow, 0.01).pass);
  CHECK_THROWS_AS(check_decay(slow, 0.0), BadParameter);
}

TEST_CASE("stationarity") {
  SdeConfig c;
  c.inner = 1;
  c.horizon = 2.0;
  c.seed = 4;
  CHECK(stationarity_check(Measure::gaussian(1), Weight::unit(), c).pass);
  const auto ok = stationarity_check(Measure::cauchy(4.0), Weight::cauchy_optimal(), c);
  CHECK(ok.pass);
  CHECK(ok.critical == doctest::Approx(1.628 / 64.0));
  c.drop_weight_gradient = true;
  CHECK_FALSE(stationarity_check(Measure::cauchy(4.0), Weight::cauchy_optimal(), c).pass);
}

TEST_CASE("simulation preconditions") {
  auto c = small_config();
  c.taming = 0.5;
  CHECK_THROWS_AS(simulate(Measure::cauchy(4.0), Weight::cauchy_optimal(), bounded_x, c), StepTooLarge);
  CHECK_THROWS_AS(simulate(Measure::gaussian(2), Weight::unit(), bounded_x, small_config()), Unsupported);
  c = small_config();
  c.dt = 0.0;
  CHECK_THROWS_AS(simulate(Measure::gaussian(1), Weight::unit(), bounded_x, c), BadParameter);
}
