#pragma once

// Standard normal CDF and quantile, in double and in arbitrary precision.
// The arbitrary-precision pair is the workhorse of the Gaussian channel
// kernel: both directions carry a <= 2 ulp error bound at the requested
// precision (computed with 64 guard bits, rounded once).

#include "pm/numeric.hpp"

namespace pm {

double phi_d(double x);        // P(Z <= x)
double phi_inv_d(double p);    // inverse CDF; +-HUGE_VAL outside (0,1)
double normal_pdf_d(double x);

BigFloat phi(const BigFloat& x, long prec);
BigFloat normal_pdf(const BigFloat& x, long prec);

// Newton iteration on phi with a precision-doubling ladder, seeded from the
// double-precision quantile (or an asymptotic log-based seed in tails too far
// for doubles). Requires 0 < p < 1.
BigFloat phi_inv(const BigFloat& p, long prec);

}  // namespace pm
