#include "rotochain/bessel.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rotochain {

namespace {

// Below this the power series (summed in extended precision) is used; above
// it the Hankel expansion is accurate to better than 1e-11.
constexpr double kSeriesLimit = 12.0;
constexpr int kMaxZero = 20;

double j0_series(double x) {
  const long double q = -0.25L * static_cast<long double>(x) * x;
  long double term = 1.0L;
  long double sum = 1.0L;
  for (int k = 1; k <= 60; ++k) {
    term *= q / (static_cast<long double>(k) * k);
    sum += term;
    if (std::fabs(term) < 1e-22L) break;
  }
  return static_cast<double>(sum);
}

double j0_asymptotic(double x) {
  // b_k = prod_{j<=k} (-(2j-1)^2) / (k! 8^k); P and Q alternate over even/odd k.
  double p = 0.0;
  double q = 0.0;
  double coeff = 1.0;
  double previous = INFINITY;
  for (int k = 0; k < 60; ++k) {
    if (k > 0) {
      const double odd = 2.0 * k - 1.0;
      coeff *= -odd * odd / (8.0 * k * x);
    }
    const double magnitude = std::fabs(coeff);
    if (magnitude > previous) break;  // optimal truncation of the divergent series
    previous = magnitude;
    const double sgn = ((k / 2) % 2 == 0) ? 1.0 : -1.0;
    if (k % 2 == 0)
      p += sgn * coeff;
    else
      q += sgn * coeff;
    if (magnitude < 1e-18) break;
  }
  const double chi = x - 0.25 * std::numbers::pi;
  return std::sqrt(2.0 / (std::numbers::pi * x)) * (p * std::cos(chi) - q * std::sin(chi));
}

}  // namespace

double bessel_j0(double x) {
  x = std::fabs(x);
  return x <= kSeriesLimit ? j0_series(x) : j0_asymptotic(x);
}

double bessel_j0_zero(int i) {
  if (i < 1 || i > kMaxZero) throw std::invalid_argument("Bessel zero index out of range [1, 20]");
  const double guess = (i - 0.25) * std::numbers::pi;
  double lo = guess - 0.5;
  double hi = guess + 0.5;
  double flo = bessel_j0(lo);
  if (flo * bessel_j0(hi) > 0.0) throw std::logic_error("J0 zero not bracketed");
  while (hi - lo > 1e-13 * hi) {
    const double mid = 0.5 * (lo + hi);
    const double fmid = bessel_j0(mid);
    if (fmid == 0.0) return mid;
    if ((fmid > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fmid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double branch_length(int i) {
  const double h = bessel_j0_zero(i);
  return 0.25 * h * h;
}

int branches_below(double Lbar) {
  int n = 0;
  while (n < kMaxZero && branch_length(n + 1) <= Lbar) ++n;
  return n;
}

}  // namespace rotochain
