#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numbers>

#include "cvbell/sampling.hpp"
#include "test_support.hpp"

using namespace cvbell;
using doctest::Approx;

namespace {

FockTensor<double> vacuum2() {
  StateSpec<double> spec;
  spec.variant = StateSpec<double>::Vacuum{2};
  spec.cutoffs = {1};
  return build(spec);
}

FockTensor<double> ghz3(double p_s) {
  StateSpec<double> spec;
  const double inv_sqrt2 = std::sqrt(0.5);
  spec.variant = StateSpec<double>::GhzVacuum{3, 1, {inv_sqrt2, 0}, {inv_sqrt2, 0}, p_s};
  spec.cutoffs = {1};
  return build(spec);
}

}  // namespace

TEST_CASE("first family on the single-photon state: lhs 1/4, rhs 0, infinite ratio") {
  const auto rep = eval_first(testing::single_photon_state(std::numbers::pi / 4, 0.0), 1);
  CHECK(rep.lhs == testing::AbsApprox(0.25, 1e-12));
  CHECK(rep.rhs == testing::AbsApprox(0.0, 1e-12));
  CHECK(rep.violated);
  CHECK(std::isinf(rep.ratio));
}

TEST_CASE("first family lhs follows sin^2(2 theta)/4") {
  for (const double theta :
       {std::numbers::pi / 8, std::numbers::pi / 4, 3 * std::numbers::pi / 8}) {
    const auto rep = eval_first(testing::single_photon_state(theta, 0.0), 1);
    CHECK(rep.lhs == testing::AbsApprox(0.25 * std::pow(std::sin(2 * theta), 2), 1e-10));
    CHECK(rep.rhs == testing::AbsApprox(0.0, 1e-12));
  }
}

TEST_CASE("first family on vacuum: nothing to violate") {
  const auto rep = eval_first(vacuum2(), 1);
  CHECK(rep.lhs == testing::AbsApprox(0.0, 1e-14));
  CHECK(rep.rhs == testing::AbsApprox(0.0, 1e-14));
  CHECK_FALSE(rep.violated);
  CHECK(rep.ratio == 0.0);
}

TEST_CASE("first family on the 3-mode GHZ state, k=1") {
  const auto rep = eval_first(ghz3(1.0), 1);
  CHECK(rep.n_modes == 3);
  CHECK(rep.lhs == testing::AbsApprox(0.25, 1e-12));
  CHECK(rep.rhs == testing::AbsApprox(0.0, 1e-12));
  CHECK(rep.violated);
  CHECK(std::isinf(rep.ratio));
}

TEST_CASE("second family on tmss: ratio is tanh^-2 r") {
  for (const double r : {0.1, 0.3, 0.5}) {
    const auto rep = eval_second(testing::tmss_state(r, tmss_min_cutoff(r)), 1);
    CHECK(rep.violated);
    CHECK(rep.ratio == testing::AbsApprox(1.0 / std::pow(std::tanh(r), 2), 1e-8));
  }
}

TEST_CASE("second family ratio blows up as r -> 0") {
  const auto rep = eval_second(testing::tmss_state(0.05, 6), 1);
  CHECK(rep.ratio == testing::AbsApprox(1.0 / std::pow(std::tanh(0.05), 2), 1e-6));
  CHECK(rep.ratio > 400.0);
}

TEST_CASE("second family on |1,1>: no two-photon coherence") {
  StateSpec<double> spec;
  spec.variant = StateSpec<double>::FockOccupation{{1, 1}};
  spec.cutoffs = {1};
  const auto rep = eval_second(build(spec), 1);
  CHECK(rep.lhs == testing::AbsApprox(0.0, 1e-14));
  CHECK(rep.rhs == testing::AbsApprox(1.0, 1e-12));
  CHECK_FALSE(rep.violated);
}

TEST_CASE("partition bounds are enforced") {
  const auto tmss = testing::tmss_state(0.3, 12);
  CHECK_THROWS_AS(eval_first(tmss, 0), std::invalid_argument);
  CHECK_THROWS_AS(eval_first(tmss, 2), std::invalid_argument);
  CHECK_THROWS_AS(eval_second(tmss, -1), std::invalid_argument);
}

TEST_CASE("report internal consistency on random states") {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const auto state = testing::random_two_mode_mixed(seed, 1 + int(seed % 3));
    for (const auto family : {Family::First, Family::Second}) {
      const auto rep = evaluate(state, family, 1);
      CHECK(rep.lhs >= -1e-12);
      CHECK(rep.rhs >= -1e-12);
      CHECK(rep.violated == (rep.lhs - rep.rhs > rep.tol));
      if (!std::isinf(rep.ratio) && rep.rhs > 1e-14)
        CHECK(rep.ratio == Approx(rep.lhs / rep.rhs).epsilon(1e-12));
    }
  }
}

TEST_CASE("quadrature decomposition reproduces |<a1 a2^dag>|^2") {
  const auto psi = testing::single_photon_state(std::numbers::pi / 4, 0.0);
  CHECK(quadrature_decomposition_first(psi) == testing::AbsApprox(0.25, 1e-10));
  CHECK(quadrature_decomposition_first(vacuum2()) == testing::AbsApprox(0.0, 1e-12));
  // TMSS has no <a1 a2^dag> moment
  CHECK(quadrature_decomposition_first(testing::tmss_state(0.5, 20)) ==
        testing::AbsApprox(0.0, 1e-10));
}

TEST_CASE("mirrored decomposition reproduces |<a1 a2>|^2") {
  const auto tmss = testing::tmss_state(0.5, 30);
  const double expected = std::pow(oracle::tmss_a1a2(0.5), 2);
  CHECK(quadrature_decomposition_second(tmss) == testing::AbsApprox(expected, 1e-8));
  CHECK(quadrature_decomposition_second(
            testing::single_photon_state(0.7, 0.3, 2)) == testing::AbsApprox(0.0, 1e-12));
  CHECK(quadrature_decomposition_second(vacuum2()) == testing::AbsApprox(0.0, 1e-12));
}

TEST_CASE("both decompositions equal the direct moments on random states") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto state = testing::random_two_mode_mixed(seed);
    const auto a1 = annihilation_op<double>(1, 2);
    const auto a2 = annihilation_op<double>(2, 2);
    const double cross = std::norm(expect<double>(state, {a1, a2.adjoint()}).value);
    const double same = std::norm(expect<double>(state, {a1, a2}).value);
    CHECK(quadrature_decomposition_first(state) == testing::AbsApprox(cross, 1e-10));
    CHECK(quadrature_decomposition_second(state) == testing::AbsApprox(same, 1e-10));
  }
}

TEST_CASE("decompositions require exactly two modes") {
  const auto g = ghz3(1.0);
  CHECK_THROWS_AS(quadrature_decomposition_first(g), std::invalid_argument);
}

TEST_CASE("loss on every mode scales both sides by eta^2 and keeps the ratio") {
  const auto tmss = testing::tmss_state(0.5, 18);
  const auto base = eval_second(tmss, 1);
  for (const double eta : {0.3, 0.6, 0.9}) {
    const auto lossy = apply_loss_all_modes(tmss, eta);
    const auto rep = eval_second(lossy, 1);
    CHECK(rep.lhs == testing::AbsApprox(eta * eta * base.lhs, 1e-8));
    CHECK(rep.rhs == testing::AbsApprox(eta * eta * base.rhs, 1e-8));
    CHECK(rep.ratio == testing::AbsApprox(base.ratio, 1e-8));
    CHECK(rep.violated);
  }
}

TEST_CASE("eta^2 scaling holds for both families on random states") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto state = testing::random_two_mode_mixed(seed);
    const double eta = 0.55;
    const auto lossy = apply_loss_all_modes(state, eta);
    for (const auto family : {Family::First, Family::Second}) {
      const auto before = evaluate(state, family, 1);
      const auto after = evaluate(lossy, family, 1);
      CHECK(after.lhs == testing::AbsApprox(eta * eta * before.lhs, 1e-8));
      CHECK(after.rhs == testing::AbsApprox(eta * eta * before.rhs, 1e-8));
      if (before.rhs > 1e-10)
        CHECK(after.ratio == testing::AbsApprox(before.ratio, 1e-8));
    }
  }
}

TEST_CASE("separable mixtures never violate either family") {
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    const auto rho = testing::random_separable(seed, 2 + int(seed % 4));
    const auto first = eval_first(rho, 1);
    const auto second = eval_second(rho, 1);
    CHECK(first.lhs - first.rhs <= 1e-9);
    CHECK(second.lhs - second.rhs <= 1e-9);
  }
}

TEST_CASE("sampled reports assemble lhs/rhs with error propagation") {
  Ingredients ing;
  ing.xx = {0.3, 0.001, 1000};
  ing.yy = {-0.3, 0.001, 1000};
  ing.xy = {0.0, 0.001, 1000};
  ing.yx = {0.0, 0.001, 1000};
  ing.n1 = {0.27, 0.002, 1000};
  ing.n2 = {0.27, 0.002, 1000};
  ing.n1n2 = {0.42, 0.003, 1000};
  const auto rep = report_from_ingredients(Family::Second, ing, 3.0);
  CHECK(rep.lhs == Approx(0.36).epsilon(1e-12));  // (0.3 + 0.3)^2
  CHECK(rep.rhs == Approx(0.0729).epsilon(1e-12));
  // d lhs/d xx = 2(xx-yy) = 1.2 etc.
  const double expected_lhs_se = std::sqrt(2 * std::pow(1.2 * 0.001, 2));
  CHECK(rep.lhs_se == Approx(expected_lhs_se).epsilon(1e-9));
  CHECK(rep.violated);
  CHECK(rep.sigma > 100.0);
  CHECK(rep.source == InequalityReport<double>::Source::Sampled);
}
