#include "pm/normal.hpp"

#include <algorithm>
#include <cmath>

namespace pm {

double phi_d(double x) {
    return 0.5 * std::erfc(-x * M_SQRT1_2);
}

double normal_pdf_d(double x) {
    return std::exp(-0.5 * x * x) * 0.39894228040143267794;  // 1/sqrt(2*pi)
}

double phi_inv_d(double p) {
    if (p <= 0) return -HUGE_VAL;
    if (p >= 1) return HUGE_VAL;

    // Rational approximation in three regimes, then one Halley refinement
    // against erfc. Absolute error after refinement is a few ulp.
    static const double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                -2.759285104469687e+02, 1.383577518672690e+02,
                                -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                -1.556989798598866e+02, 6.680131188771972e+01,
                                -1.328068155288572e+01};
    static const double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                -2.400758277161838e+00, -2.549732539343734e+00,
                                4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                2.445134137142996e+00, 3.754408661907416e+00};

    double x;
    if (p < 0.02425) {
        double q = std::sqrt(-2 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    } else if (p <= 0.97575) {
        double q = p - 0.5, r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
    } else {
        double q = std::sqrt(-2 * std::log(1 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    }

    double pdf = normal_pdf_d(x);
    if (pdf > 1e-300) {  // skip refinement where the pdf underflows
        double e = phi_d(x) - p;
        double u = e / pdf;
        x -= u / (1 + 0.5 * x * u);
    }
    return x;
}

// ---------------------------------------------------------------------------

namespace {

// Guard bits for one erfc/exp evaluation: 64 plus the bits the argument's
// magnitude costs in relative conditioning (erfc loses ~2 log2(x^2) bits in
// the far tail).
long guard_bits(const BigFloat& x) {
    double xd = std::fabs(x.to_double());
    long g = 64;
    if (std::isfinite(xd) && xd > 8) g += static_cast<long>(2 * std::log2(1 + xd * xd)) + 4;
    return g;
}

}  // namespace

BigFloat phi(const BigFloat& x, long prec) {
    long w = prec + guard_bits(x);
    BigFloat t = BigFloat::with_precision(w);
    mpfr_sqrt_ui(t.get(), 2, MPFR_RNDN);
    mpfr_div(t.get(), x.get(), t.get(), MPFR_RNDN);
    mpfr_neg(t.get(), t.get(), MPFR_RNDN);
    mpfr_erfc(t.get(), t.get(), MPFR_RNDN);
    mpfr_mul_2si(t.get(), t.get(), -1, MPFR_RNDN);
    BigFloat r = BigFloat::with_precision(prec);
    mpfr_set(r.get(), t.get(), MPFR_RNDN);
    return r;
}

BigFloat normal_pdf(const BigFloat& x, long prec) {
    long w = prec + guard_bits(x);
    BigFloat t = BigFloat::with_precision(w);
    mpfr_sqr(t.get(), x.get(), MPFR_RNDN);
    mpfr_mul_2si(t.get(), t.get(), -1, MPFR_RNDN);
    mpfr_neg(t.get(), t.get(), MPFR_RNDN);
    mpfr_exp(t.get(), t.get(), MPFR_RNDN);
    BigFloat c = BigFloat::with_precision(w);
    mpfr_const_pi(c.get(), MPFR_RNDN);
    mpfr_mul_2si(c.get(), c.get(), 1, MPFR_RNDN);
    mpfr_sqrt(c.get(), c.get(), MPFR_RNDN);
    BigFloat r = BigFloat::with_precision(prec);
    mpfr_div(r.get(), t.get(), c.get(), MPFR_RNDN);
    return r;
}

BigFloat phi_inv(const BigFloat& p, long prec) {
    if (p.sign() <= 0 || p >= BigFloat(1)) throw internal_error("phi_inv needs 0 < p < 1");
    long w = prec + 32;

    // Work on the lower tail q = min(p, 1-p); flip the sign at the end.
    bool flip = false;
    BigFloat q = p;
    if (p > mul_pow2(BigFloat(1), -1)) {
        flip = true;
        BigFloat om = BigFloat::with_precision(std::max(p.precision(), w) + 64);
        mpfr_ui_sub(om.get(), 1, p.get(), MPFR_RNDN);
        if (om.sign() <= 0) throw precision_error("quantile argument rounds to 1");
        q = om;
    }

    // Seed, accurate to ~45 bits.
    BigFloat x = BigFloat::with_precision(64);
    double qd = q.to_double();
    if (qd >= 1e-290) {
        mpfr_set_d(x.get(), phi_inv_d(qd), MPFR_RNDN);
    } else {
        // x ~ -sqrt(u) where u solves u = 2L - log(2 pi u), L = -log q.
        BigFloat L = BigFloat::with_precision(64);
        mpfr_log(L.get(), q.get(), MPFR_RNDN);
        mpfr_neg(L.get(), L.get(), MPFR_RNDN);
        BigFloat u = mul_pow2(L, 1);
        for (int it = 0; it < 64; ++it) {
            BigFloat t = BigFloat::with_precision(64);
            mpfr_const_pi(t.get(), MPFR_RNDN);
            mpfr_mul_2si(t.get(), t.get(), 1, MPFR_RNDN);
            mpfr_mul(t.get(), t.get(), u.get(), MPFR_RNDN);
            mpfr_log(t.get(), t.get(), MPFR_RNDN);
            BigFloat next = mul_pow2(L, 1) - t;
            bool done = std::fabs(next.to_double() - u.to_double()) <= 1e-10 * std::fabs(u.to_double());
            u = next;
            if (done) break;
        }
        if (u.sign() <= 0) throw internal_error("quantile seed failed");
        x = -sqrt(u);
    }

    // Newton with precision doubling; two full-precision steps at the end.
    long cur = 96;
    int full_steps = 0;
    for (int it = 0; it < 64; ++it) {
        long pk = std::min(cur, w);
        BigFloat fx = phi(x, pk);
        BigFloat dfx = normal_pdf(x, pk);
        if (dfx.is_zero()) throw precision_error("normal pdf underflow in quantile iteration");
        BigFloat step = (fx - q) / dfx;
        BigFloat xn = BigFloat::with_precision(pk);
        mpfr_sub(xn.get(), x.get(), step.get(), MPFR_RNDN);
        x = xn;
        if (pk >= w && ++full_steps >= 2) {
            BigFloat r = BigFloat::with_precision(prec);
            mpfr_set(r.get(), x.get(), MPFR_RNDN);
            if (flip) mpfr_neg(r.get(), r.get(), MPFR_RNDN);
            return r;
        }
        cur = pk * 2;
    }
    throw internal_error("quantile iteration failed to converge");
}

}  // namespace pm
