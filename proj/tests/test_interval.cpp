#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "pm/interval.hpp"
#include "pm/random.hpp"

#include <string>

using namespace pm;

namespace {

// Independent oracle: the longest constant binary prefix of an arc
// [a, a+len) is the largest k with floor(a 2^k) == m and (a+len) <= (m+1)2^-k,
// computed here directly in exact rationals.
std::string oracle_bits(const Rational& a, const Rational& len) {
    std::string bits;
    Rational b = a + len;
    for (long k = 1; k <= 300; ++k) {
        mpz_class m = floor_to_mpz(mul_pow2(a, k));
        if (mul_pow2(b, k) > Rational(m + 1)) break;
        bits += mpz_tstbit(m.get_mpz_t(), 0) ? '1' : '0';
    }
    return bits;
}

}  // namespace

TEST_CASE("membership is half-open and taken modulo one") {
    CircleInterval<Rational> j{Rational(1, 4), Rational(1, 2)};
    CHECK(!j.wraps());
    CHECK(!j.full());
    CHECK(j.contains(Rational(1, 4)));       // start inclusive
    CHECK(j.contains(Rational(3, 10)));
    CHECK(j.contains(Rational(74, 100)));
    CHECK(!j.contains(Rational(3, 4)));      // end exclusive
    CHECK(!j.contains(Rational(1, 5)));
    CHECK(!j.contains(Rational(0)));

    CircleInterval<Rational> w{Rational(9, 10), Rational(1, 5)};
    CHECK(w.wraps());
    CHECK(w.contains(Rational(9, 10)));
    CHECK(w.contains(Rational(95, 100)));
    CHECK(w.contains(Rational(0)));          // the arc passes through 0
    CHECK(w.contains(Rational(5, 100)));
    CHECK(!w.contains(Rational(1, 10)));     // wrapped end stays exclusive
    CHECK(!w.contains(Rational(1, 2)));
}

TEST_CASE("an interval of length one covers the whole circle") {
    CircleInterval<Rational> j{Rational(0), Rational(1)};
    CHECK(j.full());
    for (int i = 0; i < 16; ++i) CHECK(j.contains(Rational(i, 16)));

    // full arcs anchored elsewhere still contain everything
    CircleInterval<Rational> k{Rational(3, 10), Rational(1)};
    CHECK(k.full());
    CHECK(k.wraps());
    CHECK(k.contains(Rational(0)));
    CHECK(k.contains(Rational(3, 10)));
    CHECK(k.contains(Rational(999, 1000)));
}

TEST_CASE("membership points must lie in the unit interval") {
    CircleInterval<Rational> j{Rational(1, 4), Rational(1, 2)};
    CHECK_THROWS_AS(j.contains(Rational(-1, 10)), internal_error);
    CHECK_THROWS_AS(j.contains(Rational(1)), internal_error);
    CHECK_THROWS_AS(j.contains(Rational(3, 2)), internal_error);

    CircleInterval<double> d{0.25, 0.5};
    CHECK_THROWS_AS(d.contains(-0.1), internal_error);
    CHECK_THROWS_AS(d.contains(1.0), internal_error);
}

TEST_CASE("log2 length of dyadic arcs is exact") {
    CircleInterval<Rational> j{Rational(1, 3), Rational(1, 8)};
    CHECK(log2_length(j) == -3.0);
    CircleInterval<Rational> f{Rational(0), Rational(1)};
    CHECK(log2_length(f) == 0.0);
}

TEST_CASE("extracted bits are the binary expansion shared by the arc") {
    // [1/4, 3/8): expansions 0.0100.. through 0.0101..; shared prefix 010
    CircleInterval<Rational> a{Rational(1, 4), Rational(1, 8)};
    BitExtraction ea = extract_bits(a);
    CHECK(!ea.wrapped);
    CHECK(ea.bits == "010");

    // [1/2, 1): everything starts with 1, second bit varies
    CircleInterval<Rational> b{Rational(1, 2), Rational(1, 2)};
    CHECK(extract_bits(b).bits == "1");

    // an arc equal to one dyadic cell yields exactly that cell's address
    CircleInterval<Rational> c{Rational(3, 8), Rational(1, 8)};
    CHECK(extract_bits(c).bits == "011");

    // [0, 2^-10): ten leading zeros, the eleventh bit varies
    CircleInterval<Rational> d{Rational(0), Rational(1, 1024)};
    CHECK(extract_bits(d).bits == std::string(10, '0'));

    // arc straddling a high-order cell boundary shares no prefix at all
    CircleInterval<Rational> e{Rational(7, 16), Rational(1, 4)};
    CHECK(extract_bits(e).bits == "");
    CHECK(!extract_bits(e).wrapped);
}

TEST_CASE("wrapping and full arcs report the wrapped flag and no bits") {
    CircleInterval<Rational> w{Rational(9, 10), Rational(1, 5)};
    BitExtraction ew = extract_bits(w);
    CHECK(ew.wrapped);
    CHECK(ew.bits.empty());

    CircleInterval<Rational> f{Rational(0), Rational(1)};
    BitExtraction ef = extract_bits(f);
    CHECK(ef.wrapped);
    CHECK(ef.bits.empty());
}

TEST_CASE("extraction matches the exact-rational oracle on random arcs") {
    RandomStream rng = RandomStream::from_seed(42);
    int nonempty = 0;
    for (int t = 0; t < 400; ++t) {
        // random start on a fine grid, random length spanning many scales
        Rational a = Rational(Dyadic{mpz_class(rng.next_u64() >> 4), 60}.num, mpz_class(1) << 60);
        long scale = 1 + static_cast<long>(rng.next_below(40));
        mpz_class denom = mpz_class(1) << (scale + 8);
        mpz_class num = mpz_class(1 + rng.next_below(255));
        Rational len(num, denom);
        len.canonicalize();
        a.canonicalize();
        if (a + len > 1) continue;  // stay on non-wrapping arcs: oracle covers those
        CircleInterval<Rational> j{a, len};
        BitExtraction got = extract_bits(j);
        CHECK(!got.wrapped);
        CHECK(got.bits == oracle_bits(a, len));
        if (!got.bits.empty()) ++nonempty;
    }
    CHECK(nonempty > 300);  // the comparison exercised real prefixes
}

TEST_CASE("bigfloat arcs extract the same bits as their rational values") {
    RandomStream rng = RandomStream::from_seed(7);
    for (int t = 0; t < 200; ++t) {
        Dyadic ds = rng.next_fraction(120);
        Dyadic dl = rng.next_fraction(120);
        Rational a = scalar_from_dyadic<Rational>(ds);
        Rational len(dl.num + 1, mpz_class(1) << 140);
        len.canonicalize();
        if (a + len > 1) continue;

        CircleInterval<Rational> jr{a, len};
        BigFloat::PrecisionGuard guard(256);
        CircleInterval<BigFloat> jb{scalar_from_dyadic<BigFloat>(ds),
                                    scalar_from_dyadic<BigFloat>(Dyadic{dl.num + 1, 140})};
        BitExtraction er = extract_bits(jr);
        BitExtraction eb = extract_bits(jb);
        CHECK(er.wrapped == eb.wrapped);
        CHECK(er.bits == eb.bits);
    }
}
