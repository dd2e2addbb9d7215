#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "pm/normal.hpp"

#include <boost/math/distributions/normal.hpp>

#include <cmath>

using namespace pm;

namespace {

// |a/b - 1| <= 2^-k, for nonzero b
bool rel_close(const BigFloat& a, const BigFloat& b, long k) {
    BigFloat r = a / b - BigFloat(1);
    return abs(r) <= mul_pow2(BigFloat(1), -k);
}

const boost::math::normal_distribution<double> kStd(0.0, 1.0);

}  // namespace

TEST_CASE("double cdf agrees with an independent implementation") {
    CHECK(phi_d(0.0) == 0.5);
    for (double x : {-6.0, -3.1, -1.0, -0.2, 0.3, 1.0, 1.96, 2.5, 4.0, 7.5}) {
        double ref = boost::math::cdf(kStd, x);
        // the two erfc implementations drift apart by ~1e-14 relative in the tail
        CHECK(std::fabs(phi_d(x) - ref) <= 5e-14 * std::max(ref, 1e-300));
    }
}

TEST_CASE("double quantile agrees with an independent implementation") {
    for (double p : {1e-12, 1e-6, 0.02, 0.3, 0.5, 0.75, 0.975}) {
        double ref = boost::math::quantile(kStd, p);
        CHECK(phi_inv_d(p) == doctest::Approx(ref).epsilon(1e-12));
    }
    for (double p : {1 - 1e-6, 1 - 1e-12}) {
        // near 1 the accuracy cap is the 1-p cancellation, not the method
        double ref = boost::math::quantile(kStd, p);
        CHECK(phi_inv_d(p) == doctest::Approx(ref).epsilon(1e-9));
    }
    CHECK(phi_inv_d(0.5) == doctest::Approx(0.0).scale(1).epsilon(1e-15));
    CHECK(phi_inv_d(0.0) == -HUGE_VAL);
    CHECK(phi_inv_d(1.0) == HUGE_VAL);
}

TEST_CASE("double pdf matches the closed form") {
    for (double x : {-2.0, 0.0, 0.5, 3.0}) {
        double ref = boost::math::pdf(kStd, x);
        CHECK(normal_pdf_d(x) == doctest::Approx(ref).epsilon(1e-14));
    }
}

TEST_CASE("arbitrary-precision cdf matches the double path at moderate arguments") {
    for (double x : {-4.0, -1.3, 0.0, 0.7, 2.9}) {
        BigFloat v = phi(BigFloat(x), 256);
        CHECK(std::fabs(v.to_double() - phi_d(x)) <= 1e-15);
        CHECK(v.precision() == 256);
    }
}

TEST_CASE("cdf symmetry holds to working precision") {
    for (double x : {0.3, 1.7, 5.0, 11.0}) {
        BigFloat s = phi(BigFloat(x), 256) + phi(BigFloat(-x), 256);
        CHECK(abs(s - BigFloat(1)) <= mul_pow2(BigFloat(1), -250));
    }
}

TEST_CASE("quantile inverts the cdf at working precision") {
    BigFloat::PrecisionGuard g(320);
    for (double x : {-3.5, -0.9, 0.01, 1.2, 4.4}) {
        BigFloat p = phi(BigFloat(x), 300);
        BigFloat back = phi_inv(p, 280);
        // conditioning costs ~|x^2/2| bits of the 280: stay well inside
        CHECK(abs(back - BigFloat(x)) <= mul_pow2(BigFloat(1), -250));
    }
}

TEST_CASE("quantile handles tails beyond double range") {
    BigFloat::PrecisionGuard g(320);
    BigFloat p = mul_pow2(BigFloat(1), -300);  // ~5e-91: double seed unusable
    BigFloat x = phi_inv(p, 256);
    CHECK(x.to_double() < -20);
    BigFloat round = phi(x, 300);
    CHECK(rel_close(round, p, 230));
    // symmetric upper tail goes through the 1-p flip
    BigFloat up = BigFloat(1) - p;
    BigFloat xu = phi_inv(up, 256);
    CHECK(abs(xu + x) <= mul_pow2(BigFloat(1), -200));
}

TEST_CASE("quantile rejects arguments outside the open unit interval") {
    CHECK_THROWS_AS(phi_inv(BigFloat(0), 128), internal_error);
    CHECK_THROWS_AS(phi_inv(BigFloat(-0.5), 128), internal_error);
    CHECK_THROWS_AS(phi_inv(BigFloat(1), 128), internal_error);
    CHECK_THROWS_AS(phi_inv(BigFloat(1.5), 128), internal_error);
}

TEST_CASE("arbitrary-precision pdf matches the closed form") {
    BigFloat v = normal_pdf(BigFloat(0), 256);
    // 1/sqrt(2 pi)
    BigFloat c = BigFloat::with_precision(300);
    mpfr_const_pi(c.get(), MPFR_RNDN);
    mpfr_mul_2si(c.get(), c.get(), 1, MPFR_RNDN);
    mpfr_sqrt(c.get(), c.get(), MPFR_RNDN);
    mpfr_ui_div(c.get(), 1, c.get(), MPFR_RNDN);
    CHECK(rel_close(v, c, 250));
    CHECK(rel_close(normal_pdf(BigFloat(2), 256), normal_pdf(BigFloat(-2), 256), 250));
}

TEST_CASE("cdf is monotone on a grid") {
    BigFloat prev = phi(BigFloat(-8.0), 192);
    for (int i = -79; i <= 80; ++i) {
        BigFloat cur = phi(BigFloat(i / 10.0), 192);
        CHECK(cur > prev);
        prev = cur;
    }
}
