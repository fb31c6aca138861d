#include <doctest.h>

#include <cmath>
#include <sstream>

#include "rotochain/bessel.hpp"
#include "rotochain/config_space.hpp"

using namespace rotochain;

TEST_CASE("Bessel J0 and its zeros") {
  CHECK(bessel_j0(0.0) == 1.0);
  CHECK(bessel_j0_zero(1) == doctest::Approx(2.4048255577).epsilon(1e-10));
  CHECK(bessel_j0_zero(2) == doctest::Approx(5.5200781103).epsilon(1e-10));
  for (int i = 1; i <= 20; ++i) CHECK(std::fabs(bessel_j0(bessel_j0_zero(i))) < 1e-10);
  // both sides of the series/asymptotic split
  CHECK(bessel_j0(5.0) == doctest::Approx(-0.1775967713143383).epsilon(1e-11));
  CHECK(bessel_j0(20.0) == doctest::Approx(0.1670246643405831).epsilon(1e-11));
  CHECK(branch_length(1) == doctest::Approx(1.4457964).epsilon(1e-6));
  CHECK(branches_below(10.0) == 2);
  CHECK(branches_below(1.0) == 0);
  CHECK_THROWS(bessel_j0_zero(0));
}

TEST_CASE("critical speeds") {
  ChainParams p;
  const auto w = critical_speeds(p, 3);
  REQUIRE(w.size() == 3);
  CHECK(w[0] == doctest::Approx(4.32).epsilon(2e-3));
  CHECK(w[1] == doctest::Approx(9.92).epsilon(2e-3));
  CHECK(w[2] == doctest::Approx(15.55).epsilon(2e-3));
  const double table[] = {4.34, 9.97, 15.64};
  for (int i = 0; i < 3; ++i) CHECK(std::fabs(w[i] / table[i] - 1.0) < 0.015);

  ChainParams longer = p;
  longer.length *= 4.0;
  const auto w4 = critical_speeds(longer, 3);
  for (int i = 0; i < 3; ++i) CHECK(w4[i] == doctest::Approx(0.5 * w[i]).epsilon(1e-12));
  // the speed whose Lbar is lambda_i
  for (int i = 0; i < 3; ++i)
    CHECK(dimensionless_length(p, w[i]) == doctest::Approx(branch_length(i + 1)).epsilon(1e-12));
}

TEST_CASE("surface sampling") {
  const auto s = sample_surface(1e-4, 3.0, 20.0, 12, 200);
  CHECK(s.rows.size() == 12);
  CHECK(s.a_values.size() == 12);
  CHECK(s.sbar_values.size() == 200);
  for (const auto& row : s.rows) CHECK(row.size() == 200);
  CHECK(s.sbar_values.front() == 0.0);
  CHECK(s.sbar_values.back() == doctest::Approx(20.0));
  double lo = 0.0;
  for (const auto& q : s.rows.front()) lo = std::max(lo, std::hypot(q.u, q.uprime));
  CHECK(lo < 1e-3);

  // neighbouring rows end close together and closer on a finer grid
  const auto coarse = sample_surface(1.0, 2.0, 10.0, 5, 50);
  const auto fine = sample_surface(1.0, 2.0, 10.0, 41, 50);
  auto gap = [](const SurfaceSample& ss) {
    const auto& a = ss.rows[0].back();
    const auto& b = ss.rows[1].back();
    return std::hypot(a.u - b.u, a.uprime - b.uprime);
  };
  CHECK(gap(fine) < gap(coarse));
  std::ostringstream out;
  write_surface_gnuplot(out, s);
  CHECK(!out.str().empty());
}

TEST_CASE("zero-radius loci") {
  std::vector<double> as;
  for (double a = 1e-4; a < 5.0; a += 0.25) as.push_back(a);
  for (int i = 1; i <= 3; ++i) {
    const auto loc = zero_radius_locus(i, as);
    REQUIRE(!loc.points.empty());
    CHECK(loc.points.front().Lbar == doctest::Approx(branch_length(i)).epsilon(1e-3));
    CHECK(std::fabs(loc.points.front().u) < 1e-3);
    for (std::size_t k = 1; k < loc.points.size(); ++k)
      CHECK(loc.points[k].Lbar > loc.points[k - 1].Lbar);
    for (const auto& q : loc.points)
      CHECK(std::fabs(integrate_shape(q.a, q.Lbar).back().uprime) < 1e-8);
  }
  const auto far = zero_radius_locus(4, as, 40.0);
  CHECK(!far.skipped.empty());
}

TEST_CASE("classify_mode") {
  CHECK(classify_mode({4.0, 1.0}) == 0);
  CHECK(classify_mode({1e-5, 10.0}) == 2);
  CHECK(classify_mode({1e-5, 1.0}) == 0);
  // constant away from loci
  CHECK(classify_mode({1.0, 7.0}) == classify_mode({1.1, 7.2}));
}
