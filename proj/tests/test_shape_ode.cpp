#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "rotochain/shape_ode.hpp"
#include "rotochain/shooting.hpp"

using namespace rotochain;

namespace {

double end_slope(double a, double Lbar, double step, double tip = 0.0) {
  return integrate_shape(a, Lbar, tip, step).back().uprime;
}

}  // namespace

TEST_CASE("ode_rhs") {
  CHECK(ode_rhs(0.0, 1.0, 7.0, 0.0) == 0.0);
  CHECK(ode_rhs(0.0, 0.0, 1.0, 0.0) == doctest::Approx(-1.0 / std::sqrt(2.0)).epsilon(1e-15));
  CHECK(ode_rhs(3.0, 4.0, 0.0, 0.0) == doctest::Approx(-0.6).epsilon(1e-15));
  // the tip offset shifts the abscissa
  CHECK(ode_rhs(3.0, 1.0, 0.0, 3.0) == doctest::Approx(-0.6).epsilon(1e-15));
}

TEST_CASE("integrate_shape grid and initial data") {
  const auto c = integrate_shape(1.5, 10.0);
  REQUIRE(c.samples.size() >= 2);
  CHECK(c.samples.front().sbar == 0.0);
  CHECK(c.samples.front().u == 0.0);
  CHECK(c.samples.front().uprime == 1.5);
  CHECK(c.back().sbar == 10.0);
  for (std::size_t k = 1; k < c.samples.size(); ++k) {
    CHECK(c.samples[k].sbar > c.samples[k - 1].sbar);
    // |u''| < 1 bounds the slope
    CHECK(std::fabs(c.samples[k].uprime) <= 1.5 + c.samples[k].sbar + 1e-12);
  }
  CHECK_THROWS_AS(integrate_shape(1.0, 10.0, 0.0, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(integrate_shape(NAN, 10.0), std::invalid_argument);
}

TEST_CASE("small slopes scale linearly") {
  const auto c1 = integrate_shape(1e-6, 12.0);
  const auto c2 = integrate_shape(2e-6, 12.0);
  CHECK(c2.back().uprime == doctest::Approx(2.0 * c1.back().uprime).epsilon(1e-5));
  CHECK(std::fabs(c1.back().u) < 1e-5);
}

TEST_CASE("end slope at (2, 10) against a Richardson oracle") {
  const double h = default_step(10.0);
  const double fine = end_slope(2.0, 10.0, h / 2.0);
  const double finer = end_slope(2.0, 10.0, h / 4.0);
  const double oracle = (16.0 * finer - fine) / 15.0;
  CHECK(std::fabs(end_slope(2.0, 10.0, h) - oracle) < 1e-6);
}

TEST_CASE("RK4 step-halving order") {
  const double Lbar = 10.0;
  const auto order = [&](double tip, double h) {
    const auto s = [&](double k) { return end_slope(2.0, Lbar, k, tip); };
    return std::log2(std::fabs((s(h) - s(h / 2.0)) / (s(h / 2.0) - s(h / 4.0))));
  };
  // Away from the singular point the method shows its nominal order.
  const double shifted = order(0.5, Lbar / 64.0);
  CHECK(shifted > 3.7);
  CHECK(shifted < 4.3);
  // Starting at the origin the u-derivative of the field grows like 1/s and
  // the first steps leave an O(h^3) error; the measured order tends to 3.
  const double coarse = order(0.0, Lbar / 128.0);
  const double fine = order(0.0, Lbar / 1024.0);
  CHECK(fine < coarse);
  CHECK(fine == doctest::Approx(3.0).epsilon(0.03));
}

TEST_CASE("mirror symmetry") {
  for (double a : {0.3, 1.0, 2.7}) {
    const auto p = integrate_shape(a, 15.0);
    const auto m = integrate_shape(-a, 15.0);
    REQUIRE(p.samples.size() == m.samples.size());
    for (std::size_t k = 0; k < p.samples.size(); ++k) {
      CHECK(m.samples[k].u == -p.samples[k].u);
      CHECK(m.samples[k].uprime == -p.samples[k].uprime);
    }
  }
}

TEST_CASE("zero tip mass takes the base path") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> ua(0.05, 5.0), uL(0.5, 40.0);
  for (int k = 0; k < 10; ++k) {
    const double a = ua(rng), L = uL(rng);
    CHECK(end_slope(a, L, 0.0, 0.0) == end_slope(a, L, 0.0));
  }
  const auto c = integrate_shape(1.2, 5.0, 0.4);
  CHECK(c.samples.front().u == 1.2 * 0.4);
}

TEST_CASE("count_mode") {
  const auto table = build_counting_table(10.0);
  REQUIRE(table.n == 2);
  const double a1 = table.a_seq[0], a2 = table.a_seq[1];
  CHECK(count_mode(integrate_shape(a1 + 0.3, 10.0)) == 0);
  CHECK(count_mode(integrate_shape(0.5 * (a1 + a2), 10.0)) == 1);
  CHECK(count_mode(integrate_shape(0.5 * a2, 10.0)) == 2);
  // linearised profile: zeros at lambda_k
  CHECK(count_mode(integrate_shape(1e-5, 5.0)) == 1);
  CHECK(count_mode(integrate_shape(1e-5, 20.0)) == 3);
  CHECK(count_mode(integrate_shape(1e-5, 1.0)) == 0);
}

TEST_CASE("recover_physical") {
  ChainParams p;
  SUBCASE("hanging limit") {
    const double w = 5.0;
    const double Lbar = p.length * w * w / p.gravity;
    const auto shape = recover_physical(integrate_shape(1e-10, Lbar), p, w);
    for (const auto& s : shape.samples) {
      CHECK(std::fabs(s.rho) < 1e-9);
      CHECK(s.z == doctest::Approx(s.s - p.length).epsilon(1e-9));
      CHECK(s.tension == doctest::Approx(p.linear_density * p.gravity * s.s).epsilon(1e-9));
    }
  }
  SUBCASE("inextensible and length preserving") {
    const double w = angular_speed_for(p, 10.0);
    const auto shape = recover_physical(integrate_shape(2.0, 10.0), p, w);
    double arc = 0.0;
    for (std::size_t k = 0; k < shape.samples.size(); ++k) {
      const auto& s = shape.samples[k];
      CHECK(std::fabs(s.rho_prime * s.rho_prime + s.z_prime * s.z_prime - 1.0) < 1e-8);
      CHECK(s.tension >= 0.0);
      if (k > 0) {
        const auto& q = shape.samples[k - 1];
        arc += std::hypot(s.rho - q.rho, s.z - q.z);
        CHECK(s.z >= q.z);
      }
    }
    CHECK(arc == doctest::Approx(0.76).epsilon(1e-3));
    CHECK(shape.samples.front().tension == 0.0);
    CHECK(shape.samples.back().z == doctest::Approx(0.0));
    CHECK(shape.free_end_radius == doctest::Approx(2.0 * p.gravity / (w * w)).epsilon(1e-9));
  }
  SUBCASE("tip mass boundary condition") {
    p.tip_mass = 0.03;
    const double w = 6.0;
    const double m = tip_offset(p, w);
    const auto shape = recover_physical(integrate_shape(0.8, dimensionless_length(p, w), m), p, w);
    const auto& s0 = shape.samples.front();
    CHECK(s0.tension * s0.z_prime == doctest::Approx(p.tip_mass * p.gravity).epsilon(1e-6));
  }
}

TEST_CASE("uprime_zeros follow the Bessel branch points") {
  const auto c = integrate_shape(1e-6, 30.0);
  const auto zeros = uprime_zeros(c);
  REQUIRE(zeros.size() >= 3);
  CHECK(zeros[0] == doctest::Approx(1.4458).epsilon(1e-3));
  CHECK(zeros[1] == doctest::Approx(7.6178).epsilon(1e-3));
  CHECK(zeros[2] == doctest::Approx(18.7217).epsilon(1e-3));
}

TEST_CASE("csv export has a header and one row per node") {
  const auto c = integrate_shape(1.0, 3.0, 0.0, 0.5);
  std::ostringstream out;
  write_curve_csv(out, c);
  std::istringstream in(out.str());
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == static_cast<int>(c.samples.size()) + 1);
}
