#pragma once

// Scalar backends for the simulator.
//
// Two arithmetic modes share the templated kernel/codec code:
//   Rational  — exact GMP rationals; used for finite channels, where every
//               quantity in the recursion stays rational.
//   BigFloat  — binary floats with per-value precision on top of MPFR; used
//               for the Gaussian channel at a precision chosen from the
//               horizon budget.
// Dyadic holds shared-randomness draws exactly (k bits => numerator/2^k),
// which is what makes precision doubling reproduce a prefix of the same
// randomness instead of resampling it.

#include <gmpxx.h>
#include <mpfr.h>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

namespace pm {

// Bad user-supplied configuration (CLI exit code 2).
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Working precision exhausted, e.g. an interval endpoint collapsed (exit 3).
struct precision_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A violated internal invariant; always a bug, never a user error.
struct internal_error : std::logic_error {
    using std::logic_error::logic_error;
};

using Rational = mpq_class;

// Exact parse of a decimal string ("0.11", "-3.5e-2", "1") or an integer
// fraction ("89/100"). Throws config_error on anything else.
Rational rational_from_decimal(const std::string& s);

std::string rational_to_string(const Rational& q);  // canonical "num/den" or "num"

// ---------------------------------------------------------------------------

// Fraction num / 2^bits in [0, 1), held exactly.
struct Dyadic {
    mpz_class num;
    long bits = 1;

    Dyadic() = default;
    Dyadic(mpz_class n, long b);  // validates 0 <= n < 2^b

    Rational to_rational() const;
    double to_double() const;

    // Big-endian hex of the numerator, zero-padded to ceil(bits/4) digits;
    // the value is numerator / 2^bits.
    std::string to_hex() const;
    static Dyadic from_hex(const std::string& hex, long bits);

    bool operator==(const Dyadic& o) const { return bits == o.bits && num == o.num; }
};

// ---------------------------------------------------------------------------

// RAII wrapper over mpfr_t. Each value carries its own precision; binary
// operations compute at the max of the operand precisions. The default
// precision for fresh values is thread-local so one worker thread can run a
// whole trial at the trial's budget without threading a precision parameter
// through every call.
class BigFloat {
  public:
    BigFloat() { mpfr_init2(v_, default_precision()); mpfr_set_zero(v_, 1); }
    BigFloat(const BigFloat& o) { mpfr_init2(v_, mpfr_get_prec(o.v_)); mpfr_set(v_, o.v_, MPFR_RNDN); }
    BigFloat(BigFloat&& o) noexcept { mpfr_init2(v_, 2); mpfr_swap(v_, o.v_); }
    BigFloat(double x) { mpfr_init2(v_, default_precision()); mpfr_set_d(v_, x, MPFR_RNDN); }
    BigFloat(int x) { mpfr_init2(v_, default_precision()); mpfr_set_si(v_, x, MPFR_RNDN); }
    BigFloat(long x) { mpfr_init2(v_, default_precision()); mpfr_set_si(v_, x, MPFR_RNDN); }
    explicit BigFloat(const Rational& q, long prec = 0) {
        mpfr_init2(v_, prec > 0 ? prec : default_precision());
        mpfr_set_q(v_, q.get_mpq_t(), MPFR_RNDN);
    }
    ~BigFloat() { mpfr_clear(v_); }

    BigFloat& operator=(const BigFloat& o) {
        if (this != &o) {
            mpfr_set_prec(v_, mpfr_get_prec(o.v_));
            mpfr_set(v_, o.v_, MPFR_RNDN);
        }
        return *this;
    }
    BigFloat& operator=(BigFloat&& o) noexcept {
        mpfr_swap(v_, o.v_);
        return *this;
    }

    static BigFloat with_precision(long prec);  // zero at the given precision

    // Thread-local precision for fresh values, in bits. Never below 53.
    static long default_precision();
    static void set_default_precision(long prec);

    struct PrecisionGuard {
        explicit PrecisionGuard(long prec) : saved_(default_precision()) { set_default_precision(prec); }
        ~PrecisionGuard() { set_default_precision(saved_); }
        PrecisionGuard(const PrecisionGuard&) = delete;
        PrecisionGuard& operator=(const PrecisionGuard&) = delete;

      private:
        long saved_;
    };

    long precision() const { return mpfr_get_prec(v_); }

    double to_double() const { return mpfr_get_d(v_, MPFR_RNDN); }
    bool is_zero() const { return mpfr_zero_p(v_) != 0; }
    bool is_finite() const { return mpfr_number_p(v_) != 0; }
    int sign() const { return mpfr_sgn(v_); }

    // Exact hex serialization of the value ("0x1.8p+1"); parsing at any
    // precision >= the original reproduces the value exactly.
    std::string to_hex() const;
    static BigFloat from_hex(const std::string& s, long prec = 0);

    mpfr_ptr get() { return v_; }
    mpfr_srcptr get() const { return v_; }

    friend BigFloat operator+(const BigFloat& a, const BigFloat& b);
    friend BigFloat operator-(const BigFloat& a, const BigFloat& b);
    friend BigFloat operator*(const BigFloat& a, const BigFloat& b);
    friend BigFloat operator/(const BigFloat& a, const BigFloat& b);
    friend BigFloat operator-(const BigFloat& a);

    BigFloat& operator+=(const BigFloat& o) { *this = *this + o; return *this; }
    BigFloat& operator-=(const BigFloat& o) { *this = *this - o; return *this; }
    BigFloat& operator*=(const BigFloat& o) { *this = *this * o; return *this; }
    BigFloat& operator/=(const BigFloat& o) { *this = *this / o; return *this; }

    friend bool operator==(const BigFloat& a, const BigFloat& b) { return mpfr_cmp(a.v_, b.v_) == 0; }
    friend bool operator!=(const BigFloat& a, const BigFloat& b) { return mpfr_cmp(a.v_, b.v_) != 0; }
    friend bool operator<(const BigFloat& a, const BigFloat& b) { return mpfr_cmp(a.v_, b.v_) < 0; }
    friend bool operator<=(const BigFloat& a, const BigFloat& b) { return mpfr_cmp(a.v_, b.v_) <= 0; }
    friend bool operator>(const BigFloat& a, const BigFloat& b) { return mpfr_cmp(a.v_, b.v_) > 0; }
    friend bool operator>=(const BigFloat& a, const BigFloat& b) { return mpfr_cmp(a.v_, b.v_) >= 0; }

  private:
    mpfr_t v_;
};

BigFloat abs(const BigFloat& x);
BigFloat floor(const BigFloat& x);
BigFloat sqrt(const BigFloat& x);
BigFloat log(const BigFloat& x);
BigFloat log2(const BigFloat& x);
BigFloat exp(const BigFloat& x);
BigFloat mul_pow2(const BigFloat& x, long k);  // exact scaling by 2^k

// ---------------------------------------------------------------------------
// Scalar-generic helpers shared by the templated kernel/codec code.

Rational mod1(const Rational& x);
BigFloat mod1(const BigFloat& x);
inline double mod1(double x) {
    double r = x - std::floor(x);
    return r < 1 ? r : 0;  // floor rounding can land exactly on 1
}

double to_double(const Rational& q);  // correctly rounded via MPFR
inline double to_double(const BigFloat& x) { return x.to_double(); }

// log2 rounded to double through a 96-bit intermediate; -inf for zero,
// NaN for negative input.
double log2d(const Rational& q);
double log2d(const BigFloat& x);

// log2 at explicit precision; made for |log2| of interval lengths, where the
// absolute error must stay around one ulp at `prec` even for tiny arguments.
BigFloat log2_bf(const Rational& q, long prec);
BigFloat log2_bf(const BigFloat& x, long prec);

mpz_class floor_to_mpz(const Rational& q);
mpz_class floor_to_mpz(const BigFloat& x);

Rational mul_pow2(const Rational& x, long k);

template <class S>
S scalar_from_rational(const Rational& q);
template <>
inline Rational scalar_from_rational<Rational>(const Rational& q) { return q; }
template <>
inline BigFloat scalar_from_rational<BigFloat>(const Rational& q) { return BigFloat(q); }

template <class S>
S scalar_from_dyadic(const Dyadic& d);
template <>
inline Rational scalar_from_dyadic<Rational>(const Dyadic& d) { return d.to_rational(); }
template <>
BigFloat scalar_from_dyadic<BigFloat>(const Dyadic& d);

}  // namespace pm
