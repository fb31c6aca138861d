#include <doctest.h>

#include <cmath>
#include <vector>

#include "rotochain/bessel.hpp"
#include "rotochain/shooting.hpp"

using namespace rotochain;

TEST_CASE("residual against a dense grid over a") {
  const DimensionlessBVP bvp{-0.05, 10.0};
  const int n = 10000;
  const double lo = 0.013, hi = 4.9;
  const double da = (hi - lo) / (n - 1);
  const int k = static_cast<int>((2.0 - lo) / da);
  const double a0 = lo + k * da, a1 = a0 + da;
  const double s0 = integrate_shape(a0, 10.0).back().uprime;
  const double s1 = integrate_shape(a1, 10.0).back().uprime;
  const double interp = s0 + (s1 - s0) * (2.0 - a0) / da;
  CHECK(residual(2.0, bvp) == doctest::Approx(interp + 0.05).epsilon(1e-5));
}

TEST_CASE("residual vanishes at a1 for zero radius") {
  const auto table = build_counting_table(10.0);
  CHECK(std::fabs(residual(table.a_seq[0], {0.0, 10.0})) < 1e-6);
  // signed slopes give the mirrored residual
  CHECK(residual(-1.3, {0.0, 10.0}) == -residual(1.3, {0.0, 10.0}));
}

TEST_CASE("solve_single against bisection on the first locus") {
  double lo = 0.01, hi = 5.0;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    (nth_zero(mid, 1, 40.0) < 5.0 ? lo : hi) = mid;
  }
  const DimensionlessBVP bvp{0.0, 5.0};
  const auto sol = solve_single(0.9 * lo, bvp);
  CHECK(sol.a_star == doctest::Approx(lo).epsilon(1e-6));
  CHECK(std::fabs(sol.residual) <= 1e-9);
  // the zero at the attachment is not an interior crossing
  CHECK(sol.mode == 0);

  const auto again = solve_single(sol.a_star, bvp);
  CHECK(again.a_star == sol.a_star);
}

TEST_CASE("solve_single never returns a non-root") {
  const DimensionlessBVP bvp{-0.3, 12.0};
  ShootingOptions opts;
  opts.max_iterations = 6;
  int failures = 0;
  for (double a = 0.05; a < 5.0; a += 0.15) {
    try {
      const auto sol = solve_single(a, bvp, opts);
      CHECK(std::fabs(sol.residual) <= opts.tol);
      CHECK(std::fabs(residual(sol.orientation * sol.a_star, bvp)) <= opts.tol);
    } catch (const ShootingFailure& e) {
      ++failures;
      CHECK(std::isfinite(e.last_residual()));
      CHECK(std::fabs(e.last_residual()) > opts.tol);
    }
  }
  CHECK(failures > 0);
  CHECK_THROWS_AS(solve_single(-1.0, bvp), std::invalid_argument);
}

TEST_CASE("enumeration cases") {
  SUBCASE("large radius: one mode-0 solution") {
    const auto table = build_counting_table(10.0);
    const auto sols = enumerate_solutions({-(table.rbar_seq[0] + 0.5), 10.0});
    REQUIRE(sols.size() == 1);
    CHECK(sols[0].mode == 0);
  }
  SUBCASE("zero radius between lambda_2 and lambda_3") {
    const auto sols = enumerate_solutions({0.0, 10.0});
    REQUIRE(sols.size() == 2);
    // u' vanishes at the attached end, so only interior zeros count
    CHECK(sols[0].mode == 0);
    CHECK(sols[1].mode == 1);
    CHECK(count_mode(sols[0].curve) == 0);
    CHECK(uprime_zeros(sols[0].curve).size() == 1);
  }
  SUBCASE("five solutions") {
    const auto table = build_counting_table(25.0);
    REQUIRE(table.n >= 3);
    const double rbar = -0.5 * (table.rbar_seq[1] + table.rbar_seq[2]);
    const auto sols = enumerate_solutions({rbar, 25.0});
    REQUIRE(sols.size() == 5);
    const std::vector<int> want{0, 1, 1, 2, 2};
    for (std::size_t k = 0; k < 5; ++k) {
      CHECK(sols[k].mode == want[k]);
      CHECK(std::fabs(sols[k].residual) <= 1e-9);
      if (k > 0) CHECK(sols[k].a_star < sols[k - 1].a_star);
    }
    const auto pred = predict_solution_count(table, rbar);
    CHECK(pred.count == 5);
    CHECK(pred.which == CountCase::between);
    CHECK(expected_modes(pred, table.n) == want);
  }
}

TEST_CASE("stored curves re-integrate") {
  for (const auto& s : enumerate_solutions({-0.2, 20.0})) {
    const auto c = integrate_shape(s.a_star, 20.0);
    CHECK(c.back().uprime == s.curve.back().uprime);
    CHECK(s.orientation * s.curve.back().uprime == doctest::Approx(-0.2).epsilon(1e-8));
  }
}

TEST_CASE("nth_zero") {
  CHECK(nth_zero(1e-6, 1, 40.0) == doctest::Approx(1.4458).epsilon(1e-4));
  CHECK(nth_zero(1e-6, 2, 40.0) == doctest::Approx(branch_length(2)).epsilon(1e-4));
  double prev = 0.0;
  for (double a = 0.1; a < 5.0; a += 0.2) {
    const double z = nth_zero(a, 1, 40.0);
    CHECK(z > prev);
    prev = z;
  }
  CHECK_THROWS_AS(nth_zero(1.0, 3, 5.0), ZeroNotFound);
}

TEST_CASE("counting table") {
  const auto t = build_counting_table(10.0);
  CHECK(t.n == 2);
  CHECK(t.a_seq.size() == 2);
  CHECK(t.rbar_seq.size() == 2);
  CHECK(t.a_decreasing);
  CHECK(t.rbar_decreasing);
  CHECK(t.unimodal_consistent);

  const auto near = build_counting_table(branch_length(1) + 0.01);
  CHECK(near.n == 1);
  CHECK(near.a_seq[0] < 0.2);

  const auto none = build_counting_table(1.0);
  CHECK(none.n == 0);
  CHECK(none.a_seq.empty());
}

TEST_CASE("count prediction cases") {
  const auto t = build_counting_table(25.0);
  CHECK(predict_solution_count(t, 0.0).count == t.n);
  CHECK(predict_solution_count(t, -(t.rbar_seq[0] + 0.1)).count == 1);
  CHECK(predict_solution_count(t, -0.5 * t.rbar_seq.back()).count == 2 * t.n + 1);
  const auto tangent = predict_solution_count(t, -t.rbar_seq[0]);
  CHECK(tangent.which == CountCase::tangent);
  CHECK(tangent.count == 2);
}
