#pragma once

namespace rotochain {

/// Bessel function of the first kind, order zero.
double bessel_j0(double x);

/// i-th positive zero h_i of J0, 1 <= i <= 20, accurate to 1e-10.
double bessel_j0_zero(int i);

/// Branch length lambda_i = h_i^2 / 4 of the i-th zero-radius locus.
double branch_length(int i);

/// Number of i with lambda_i <= Lbar (capped at the supported range).
int branches_below(double Lbar);

}  // namespace rotochain
