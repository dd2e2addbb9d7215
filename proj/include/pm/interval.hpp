#pragma once

// Arcs of the unit circle, stored as (start, length) with start in [0,1) and
// length in (0,1]. Membership is half-open: [start, start+length) taken
// mod 1. Used for the decoder's interval recursion and for reading message
// bits off the final arc.

#include "pm/numeric.hpp"

#include <string>

namespace pm {

template <class S>
struct CircleInterval {
    S start;
    S length;

    bool full() const { return length == S(1); }
    bool wraps() const { return start + length > S(1); }

    bool contains(const S& theta) const {
        if (theta < S(0) || theta >= S(1)) throw internal_error("membership point outside [0,1)");
        if (full()) return true;
        S end = start + length;
        if (end <= S(1)) return theta >= start && theta < end;
        return theta >= start || theta < end - S(1);
    }
};

template <class S>
double log2_length(const CircleInterval<S>& j) {
    return log2d(j.length);
}

struct BitExtraction {
    std::string bits;
    bool wrapped = false;  // arc straddles 0: no binary prefix is constant on it
};

namespace detail {

inline int cmp_mpz(const Rational& a, const mpz_class& m) { return cmp(a, m); }
inline int cmp_mpz(const BigFloat& a, const mpz_class& m) { return mpfr_cmp_z(a.get(), m.get_mpz_t()); }

// b = start + length, rounded upward so a rounded sum can only shorten the
// extracted prefix, never wrongly extend it.
inline Rational add_upper(const Rational& a, const Rational& b) { return a + b; }
inline BigFloat add_upper(const BigFloat& a, const BigFloat& b) {
    BigFloat r = BigFloat::with_precision(std::max(a.precision(), b.precision()) + 4);
    mpfr_add(r.get(), a.get(), b.get(), MPFR_RNDU);
    return r;
}

}  // namespace detail

// Longest binary string w such that every point of the arc has binary
// expansion starting with w, i.e. the largest k with the arc inside one
// dyadic cell [m 2^-k, (m+1) 2^-k). Wrapping arcs contain 0 and share no
// prefix; they return empty bits and the wrapped flag.
template <class S>
BitExtraction extract_bits(const CircleInterval<S>& j) {
    BitExtraction out;
    if (j.full() || j.wraps()) {
        out.wrapped = true;
        return out;
    }
    S b = detail::add_upper(j.start, j.length);
    double ll = log2d(j.length);
    long kmax = ll <= -1 ? static_cast<long>(-ll) + 8 : 8;
    for (long k = 1; k <= kmax; ++k) {
        mpz_class m = floor_to_mpz(mul_pow2(j.start, k));
        // arc stays inside the cell iff b <= (m+1) 2^-k
        if (detail::cmp_mpz(mul_pow2(b, k), m + 1) > 0) break;
        out.bits += mpz_tstbit(m.get_mpz_t(), 0) ? '1' : '0';
    }
    return out;
}

}  // namespace pm
