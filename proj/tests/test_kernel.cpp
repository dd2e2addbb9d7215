#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "pm/kernel.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

using namespace pm;

namespace {

ChannelSpec bsc011() { return ChannelSpec::bsc(Rational(11, 100)); }

ChannelSpec dmc3x3() {
    return ChannelSpec::dmc(
        {Rational(1, 5), Rational(3, 10), Rational(1, 2)},
        {{Rational(7, 10), Rational(1, 5), Rational(1, 10)},
         {Rational(1, 10), Rational(4, 5), Rational(1, 10)},
         {Rational(1, 5), Rational(1, 5), Rational(3, 5)}});
}

ChannelSpec zchannel() {
    return ChannelSpec::dmc({Rational(1, 2), Rational(1, 2)},
                            {{Rational(1), Rational(0)}, {Rational(1, 2), Rational(1, 2)}});
}

// Arc [u, u+len) mod 1 pulled through the inverse kernel; length of the image
// arc. Valid for strictly monotone kernels, where the inverse is a circle
// homeomorphism.
Rational image_len(const DmcKernel& k, long y, const Rational& u, const Rational& len) {
    Rational s = mod1(u);
    Rational e = mod1(s + len);
    Rational gs = k.inverse(s, y);
    Rational ge = k.inverse(e, y);
    return mod1(ge - gs);
}

}  // namespace

TEST_CASE("bsc kernel has the posterior-ratio slopes") {
    DmcKernel k = build_dmc_kernel(bsc011());
    REQUIRE(k.breaks.size() == 3);
    CHECK(k.breaks[1] == Rational(1, 2));
    // slope on the matching half is W(y|x)/P_Y(y) = (89/100)/(1/2)
    CHECK(k.slope[0][0] == Rational(89, 50));
    CHECK(k.slope[0][1] == Rational(11, 50));
    CHECK(k.slope[1][0] == Rational(11, 50));
    CHECK(k.slope[1][1] == Rational(89, 50));
    CHECK(k.cum[0][1] == Rational(89, 100));
    CHECK(k.cum[1][1] == Rational(11, 100));
    CHECK(k.cum[0][2] == 1);
    CHECK(k.out_pmf[0] == Rational(1, 2));
    CHECK(k.reachable[0]);
    CHECK(k.max_abs_log2_slope() == doctest::Approx(std::log2(50.0 / 11.0)).epsilon(1e-12));
}

TEST_CASE("input_of partitions the unit interval by the pmf prefix sums") {
    DmcKernel k = build_dmc_kernel(dmc3x3());
    CHECK(k.input_of(Rational(0)) == 0);
    CHECK(k.input_of(Rational(19, 100)) == 0);
    CHECK(k.input_of(Rational(1, 5)) == 1);  // boundary belongs to the right segment
    CHECK(k.input_of(Rational(49, 100)) == 1);
    CHECK(k.input_of(Rational(1, 2)) == 2);
    CHECK(k.input_of(Rational(99, 100)) == 2);
    CHECK_THROWS_AS(k.input_of(Rational(1)), internal_error);
    CHECK_THROWS_AS(k.input_of(Rational(-1, 10)), internal_error);
}

TEST_CASE("forward and inverse kernels are exact mutual inverses") {
    for (const ChannelSpec& ch : {bsc011(), dmc3x3()}) {
        DmcKernel k = build_dmc_kernel(ch);
        RandomStream rng = RandomStream::from_seed(23);
        for (long y = 0; y < static_cast<long>(k.num_outputs()); ++y) {
            for (int i = 0; i < 200; ++i) {
                Rational v = rng.next_fraction(64).to_rational();
                CHECK(k.eval(k.inverse(v, y), y) == v);
                Rational theta = rng.next_fraction(64).to_rational();
                CHECK(k.inverse(k.eval(theta, y), y) == theta);
            }
            CHECK(k.eval(Rational(0), y) == 0);
            CHECK(k.eval(Rational(1), y) == 1);
            CHECK(k.inverse(Rational(0), y) == 0);
            CHECK(k.inverse(Rational(1), y) == 1);
        }
    }
}

TEST_CASE("flat posterior segments are skipped by the inverse") {
    DmcKernel k = build_dmc_kernel(zchannel());
    // y=1 rules out x=0, so the posterior is flat on [0, 1/2)
    CHECK(k.slope[1][0] == 0);
    CHECK(k.inverse(Rational(0), 1) == Rational(1, 2));
    CHECK(k.inverse(Rational(1, 4), 1) == Rational(5, 8));  // 1/2 + (1/4)/2
    // forward then inverse collapses the flat stretch to its left edge
    CHECK(k.inverse(k.eval(Rational(1, 4), 1), 1) == Rational(1, 2));
}

TEST_CASE("bigfloat kernel tracks the rational one") {
    DmcKernel k = build_dmc_kernel(dmc3x3());
    DmcKernelT<BigFloat> kb = to_bigfloat_kernel(k, 192);
    RandomStream rng = RandomStream::from_seed(29);
    for (int i = 0; i < 50; ++i) {
        Rational v = rng.next_fraction(64).to_rational();
        for (long y = 0; y < 3; ++y) {
            BigFloat d = BigFloat(v, 192) - kb.eval(kb.inverse(BigFloat(v, 192), y), y);
            CHECK(abs(d) <= mul_pow2(BigFloat(1), -180));
        }
    }
}

TEST_CASE("one backward step preserves arc length on average, exactly") {
    // The inverse kernel is a monotone circle bijection, so the image length
    // of an arc at a uniformly random position integrates to the arc length.
    // The integrand is piecewise linear in the position with kinks only where
    // an endpoint crosses a cum breakpoint, so trapezoids between consecutive
    // kinks integrate it exactly. This identity is what makes |J_k| a
    // martingale under the shared uniform shift, and it pins the decoder's
    // escape probability to p_e; see the README rate notes.
    for (const ChannelSpec& ch : {bsc011(), dmc3x3()}) {
        DmcKernel k = build_dmc_kernel(ch);
        for (const Rational& len : {Rational(1, 3), Rational(19, 20), Rational(1, 100)}) {
            for (long y = 0; y < static_cast<long>(k.num_outputs()); ++y) {
                std::vector<Rational> cuts;
                for (const Rational& c : k.cum[static_cast<std::size_t>(y)]) {
                    cuts.push_back(mod1(c));
                    cuts.push_back(mod1(c - len));
                }
                std::sort(cuts.begin(), cuts.end());
                cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
                cuts.push_back(cuts.front() + 1);
                Rational integral = 0;
                for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
                    Rational mid_lo = image_len(k, y, cuts[i], len);
                    Rational mid_hi = image_len(k, y, cuts[i + 1], len);
                    integral += (mid_lo + mid_hi) / 2 * (cuts[i + 1] - cuts[i]);
                }
                CHECK(integral == len);
            }
        }
    }
}

TEST_CASE("awgn kernel matches its closed form") {
    ChannelSpec ch = ChannelSpec::awgn(Rational(1), Rational(1));
    AwgnKernel k = build_awgn_kernel(ch, 256);
    CHECK(k.coef_a_d == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(k.sigma_d == doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));
    const boost::math::normal_distribution<double> nd(0.0, 1.0);
    RandomStream rng = RandomStream::from_seed(31);
    double worst = 0;
    for (int i = 0; i < 1000; ++i) {
        double theta = 0.002 + 0.996 * rng.next_unit();
        double y = 6.0 * rng.next_unit() - 3.0;
        double ref = boost::math::cdf(
            nd, (std::sqrt(1.0) * boost::math::quantile(nd, theta) - 0.5 * y) / std::sqrt(0.5));
        double got = k.eval(BigFloat(theta), BigFloat(y)).to_double();
        worst = std::max(worst, std::fabs(got - ref));
    }
    CHECK(worst <= 1e-9);
}

TEST_CASE("awgn inverse round-trips at working precision") {
    AwgnKernel k = build_awgn_kernel(ChannelSpec::awgn(Rational(1), Rational(1)), 192);
    RandomStream rng = RandomStream::from_seed(37);
    for (double y : {-2.0, 0.0, 1.5}) {
        for (int i = 0; i < 40; ++i) {
            BigFloat v = scalar_from_dyadic<BigFloat>(rng.next_fraction(160));
            if (v.is_zero()) continue;
            BigFloat back = k.eval(k.inverse(v, BigFloat(y)), BigFloat(y));
            CHECK(abs(back - v) <= mul_pow2(BigFloat(1), -150));
        }
    }
}

TEST_CASE("awgn double paths track the precise ones") {
    AwgnKernel k = build_awgn_kernel(ChannelSpec::awgn(Rational(1), Rational(1)), 192);
    RandomStream rng = RandomStream::from_seed(41);
    for (int i = 0; i < 200; ++i) {
        double v = 0.01 + 0.98 * rng.next_unit();
        double y = 4.0 * rng.next_unit() - 2.0;
        CHECK(k.inverse_d(v, y) ==
              doctest::Approx(k.inverse(BigFloat(v), BigFloat(y)).to_double()).epsilon(1e-11));
        CHECK(k.eval_d(v, y) ==
              doctest::Approx(k.eval(BigFloat(v), BigFloat(y)).to_double()).epsilon(1e-11));
        // derivative against a centered difference
        double h = 1e-6;
        double fd = (k.inverse_d(v + h, y) - k.inverse_d(v - h, y)) / (2 * h);
        CHECK(k.inverse_deriv_d(v, y) == doctest::Approx(fd).epsilon(1e-4));
    }
}

TEST_CASE("precision budget covers the worst-case per-step stretch") {
    ChannelSpec b = bsc011();
    // |log2 (50/11)| = 2.18 rounds up to 3 bits per step
    CHECK(default_precision_budget(b, 64) == 128 + 3 * 64);
    CHECK(default_precision_budget(b, 0) == 128);
    ChannelSpec a = ChannelSpec::awgn(Rational(1), Rational(1));
    CHECK(default_precision_budget(a, 64) == 128 + 4 * 64);
    ChannelSpec noiseless = ChannelSpec::bsc(Rational(0));
    CHECK(default_precision_budget(noiseless, 10) >= 128 + 10);
}

TEST_CASE("smoothed derivative of the identity is one") {
    MonotoneMap id = identity_map();
    for (double lam : {0.001, 0.25, 1.0})
        for (double x : {0.0, 0.3, 0.9})
            CHECK(smoothed_derivative(id, x, lam) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(smoothed_derivative_exact(id, Rational(1, 3), Rational(1, 7)) == 1);
}

TEST_CASE("smoothed derivative averages the slopes under the window") {
    DmcKernel k = build_dmc_kernel(bsc011());
    MonotoneMap m = dmc_inverse_map(k, 0);
    // window [0.2, 0.4] sits inside the first segment: slope is exactly 50/89
    CHECK(smoothed_derivative_exact(m, Rational(3, 10), Rational(1, 5)) == Rational(50, 89));
    // full window spans both segments: integral is the whole range, 1
    CHECK(smoothed_derivative_exact(m, Rational(1, 2), Rational(1)) == 1);
    // exact and double paths agree
    RandomStream rng = RandomStream::from_seed(43);
    for (int i = 0; i < 100; ++i) {
        Rational x = rng.next_fraction(40).to_rational();
        Rational lam = (rng.next_fraction(40).to_rational() + Rational(1, 1000)) * Rational(99, 100);
        double d = smoothed_derivative(m, to_double(x), to_double(lam));
        double e = to_double(smoothed_derivative_exact(m, x, lam));
        CHECK(d == doctest::Approx(e).epsilon(1e-9));
    }
}

TEST_CASE("windows wrapping the circle seam measure both pieces") {
    DmcKernel k = build_dmc_kernel(bsc011());
    MonotoneMap m = dmc_inverse_map(k, 0);
    // window centered at 0 with width 1/5: [-1/10, 1/10] wraps to
    // [9/10, 1) and [0, 1/10): images under FInv(.|0) have lengths
    // (1 - FInv(9/10)) and FInv(1/10)
    Rational lo = k.inverse(Rational(9, 10), 0);
    Rational hi = k.inverse(Rational(1, 10), 0);
    Rational want = (1 - lo) + hi;
    CHECK(smoothed_derivative_exact(m, Rational(0), Rational(1, 5)) == want / Rational(1, 5));
}

TEST_CASE("max stretch over the default grid dominates single windows") {
    DmcKernel k = build_dmc_kernel(bsc011());
    MonotoneMap m = dmc_inverse_map(k, 1);
    std::vector<double> grid = default_lambda_grid();
    CHECK(!grid.empty());
    for (double lam : grid) {
        CHECK(lam > 0);
        CHECK(lam <= 1);
    }
    for (double x : {0.1, 0.52, 0.97}) {
        double mx = max_stretch(m, x, grid);
        for (double lam : {grid[0], grid[3], grid.back()})
            CHECK(mx >= smoothed_derivative(m, x, lam) - 1e-12);
        // the map's slopes are 50/89 and 50/11: the max stretch lies between,
        // up to the cancellation noise of double windows at width 2^-40
        CHECK(mx <= 50.0 / 11.0 * (1 + 1e-3));
        CHECK(mx >= 50.0 / 89.0 * (1 - 1e-3));
    }
}

TEST_CASE("strict monotonicity validation separates the families") {
    CHECK(validate_p1(build_dmc_kernel(bsc011())).holds);
    CHECK(validate_p1(build_dmc_kernel(dmc3x3())).holds);
    P1Report z = validate_p1(build_dmc_kernel(zchannel()));
    CHECK(!z.holds);
    CHECK(!z.notes.empty());
    AwgnKernel ak = build_awgn_kernel(ChannelSpec::awgn(Rational(1), Rational(1)), 192);
    CHECK(validate_p1(ak, {-2.0, 0.0, 2.0}).holds);
}

TEST_CASE("moment regularity check runs and stays bounded in-family") {
    std::vector<double> lambdas;
    for (int e = 4; e <= 12; e += 2) lambdas.push_back(std::ldexp(1.0, -e));
    RandomStream rng = RandomStream::from_seed(47);
    P2Report r = validate_p2(build_dmc_kernel(bsc011()), 1.0, lambdas, 2000, rng);
    CHECK(r.rows.size() == lambdas.size());
    CHECK(r.bounded);
    CHECK(r.trend_p > 0.01);
    for (const P2Row& row : r.rows) CHECK(row.moment >= 0);

    AwgnKernel ak = build_awgn_kernel(ChannelSpec::awgn(Rational(1), Rational(1)), 192);
    P2Report ra = validate_p2(ak, 1.0, lambdas, 1500, RandomStream::from_seed(53));
    CHECK(ra.bounded);
    CHECK(ra.rows.size() == lambdas.size());
}
