#include "pm/numeric.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace pm {

namespace {

bool all_digits(const std::string& s) {
    if (s.empty()) return false;
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c) != 0; });
}

}  // namespace

Rational rational_from_decimal(const std::string& s) {
    if (s.empty()) throw config_error("empty number");

    auto slash = s.find('/');
    if (slash != std::string::npos) {
        std::string ns = s.substr(0, slash), ds = s.substr(slash + 1);
        bool neg = false;
        if (!ns.empty() && (ns[0] == '+' || ns[0] == '-')) {
            neg = ns[0] == '-';
            ns = ns.substr(1);
        }
        if (!all_digits(ns) || !all_digits(ds)) throw config_error("bad fraction: " + s);
        mpz_class num(ns, 10), den(ds, 10);
        if (den == 0) throw config_error("zero denominator: " + s);
        Rational q(num, den);
        q.canonicalize();
        return neg ? Rational(-q) : q;
    }

    std::size_t i = 0;
    bool neg = false;
    if (i < s.size() && (s[i] == '+' || s[i] == '-')) {
        neg = s[i] == '-';
        ++i;
    }
    std::string digits;
    long frac_len = 0;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) digits += s[i++];
    if (i < s.size() && s[i] == '.') {
        ++i;
        while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
            digits += s[i++];
            ++frac_len;
        }
    }
    if (digits.empty()) throw config_error("bad number: " + s);
    long exp10 = 0;
    if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
        ++i;
        bool eneg = false;
        if (i < s.size() && (s[i] == '+' || s[i] == '-')) {
            eneg = s[i] == '-';
            ++i;
        }
        std::string es;
        while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) es += s[i++];
        if (es.empty() || es.size() > 6) throw config_error("bad exponent: " + s);
        exp10 = std::stol(es);
        if (eneg) exp10 = -exp10;
    }
    if (i != s.size()) throw config_error("bad number: " + s);

    mpz_class mant(digits, 10);
    long e = exp10 - frac_len;
    mpz_class pow10;
    mpz_ui_pow_ui(pow10.get_mpz_t(), 10, static_cast<unsigned long>(e >= 0 ? e : -e));
    Rational q = e >= 0 ? Rational(mant * pow10) : Rational(mant, pow10);
    q.canonicalize();
    return neg ? Rational(-q) : q;
}

std::string rational_to_string(const Rational& q) {
    Rational c = q;
    c.canonicalize();  // literals like Rational(22, 4) arrive unreduced
    return c.get_str();
}

// ---------------------------------------------------------------------------

Dyadic::Dyadic(mpz_class n, long b) : num(std::move(n)), bits(b) {
    if (bits < 1) throw config_error("dyadic precision must be >= 1 bit");
    if (num < 0 || mpz_sizeinbase(num.get_mpz_t(), 2) > static_cast<std::size_t>(bits))
        throw internal_error("dyadic numerator out of range");
}

Rational Dyadic::to_rational() const {
    mpz_class den = 1;
    den <<= bits;
    Rational q(num, den);
    q.canonicalize();
    return q;
}

double Dyadic::to_double() const {
    mpfr_t t;
    mpfr_init2(t, 53);
    mpfr_set_z(t, num.get_mpz_t(), MPFR_RNDN);
    mpfr_mul_2si(t, t, -bits, MPFR_RNDN);
    double d = mpfr_get_d(t, MPFR_RNDN);
    mpfr_clear(t);
    return d;
}

std::string Dyadic::to_hex() const {
    std::size_t width = static_cast<std::size_t>((bits + 3) / 4);
    std::string digits = num.get_str(16);
    if (digits.size() > width) throw internal_error("dyadic wider than advertised");
    return std::string(width - digits.size(), '0') + digits;
}

Dyadic Dyadic::from_hex(const std::string& hex, long bits) {
    if (bits < 1) throw config_error("dyadic precision must be >= 1 bit");
    std::size_t width = static_cast<std::size_t>((bits + 3) / 4);
    if (hex.size() != width) throw config_error("v_hex has wrong width for precision");
    if (!std::all_of(hex.begin(), hex.end(), [](unsigned char c) { return std::isxdigit(c) != 0; }))
        throw config_error("v_hex is not hexadecimal: " + hex);
    mpz_class n(hex, 16);
    mpz_class lim = 1;
    lim <<= bits;
    if (n >= lim) throw config_error("v_hex out of range for precision");
    return Dyadic(std::move(n), bits);
}

// ---------------------------------------------------------------------------

namespace {
thread_local long g_default_prec = 128;
}

long BigFloat::default_precision() { return g_default_prec; }

void BigFloat::set_default_precision(long prec) {
    g_default_prec = std::max<long>(prec, 53);
}

BigFloat BigFloat::with_precision(long prec) {
    BigFloat r;
    mpfr_set_prec(r.v_, std::max<long>(prec, MPFR_PREC_MIN));
    mpfr_set_zero(r.v_, 1);
    return r;
}

std::string BigFloat::to_hex() const {
    char* s = nullptr;
    mpfr_asprintf(&s, "%Ra", v_);
    std::string out(s);
    mpfr_free_str(s);
    return out;
}

BigFloat BigFloat::from_hex(const std::string& s, long prec) {
    if (prec <= 0) {
        // Enough precision that parsing is exact: 4 bits per mantissa digit.
        long digits = 0;
        for (char c : s)
            if (std::isxdigit(static_cast<unsigned char>(c))) ++digits;
        prec = std::max(default_precision(), 4 * digits + 4);
    }
    BigFloat r = with_precision(prec);
    if (mpfr_set_str(r.v_, s.c_str(), 0, MPFR_RNDN) != 0)
        throw config_error("bad hex float: " + s);
    return r;
}

BigFloat operator+(const BigFloat& a, const BigFloat& b) {
    BigFloat r = BigFloat::with_precision(std::max(a.precision(), b.precision()));
    mpfr_add(r.v_, a.v_, b.v_, MPFR_RNDN);
    return r;
}

BigFloat operator-(const BigFloat& a, const BigFloat& b) {
    BigFloat r = BigFloat::with_precision(std::max(a.precision(), b.precision()));
    mpfr_sub(r.v_, a.v_, b.v_, MPFR_RNDN);
    return r;
}

BigFloat operator*(const BigFloat& a, const BigFloat& b) {
    BigFloat r = BigFloat::with_precision(std::max(a.precision(), b.precision()));
    mpfr_mul(r.v_, a.v_, b.v_, MPFR_RNDN);
    return r;
}

BigFloat operator/(const BigFloat& a, const BigFloat& b) {
    BigFloat r = BigFloat::with_precision(std::max(a.precision(), b.precision()));
    mpfr_div(r.v_, a.v_, b.v_, MPFR_RNDN);
    return r;
}

BigFloat operator-(const BigFloat& a) {
    BigFloat r = BigFloat::with_precision(a.precision());
    mpfr_neg(r.get(), a.get(), MPFR_RNDN);
    return r;
}

namespace {
template <class F>
BigFloat unary_op(const BigFloat& x, F f) {
    BigFloat r = BigFloat::with_precision(x.precision());
    f(r.get(), x.get(), MPFR_RNDN);
    return r;
}
}  // namespace

BigFloat abs(const BigFloat& x) { return unary_op(x, mpfr_abs); }
BigFloat floor(const BigFloat& x) {
    BigFloat r = BigFloat::with_precision(x.precision());
    mpfr_floor(r.get(), x.get());
    return r;
}
BigFloat sqrt(const BigFloat& x) { return unary_op(x, mpfr_sqrt); }
BigFloat log(const BigFloat& x) { return unary_op(x, mpfr_log); }
BigFloat log2(const BigFloat& x) { return unary_op(x, mpfr_log2); }
BigFloat exp(const BigFloat& x) { return unary_op(x, mpfr_exp); }

BigFloat mul_pow2(const BigFloat& x, long k) {
    BigFloat r = x;
    mpfr_mul_2si(r.get(), r.get(), k, MPFR_RNDN);
    return r;
}

// ---------------------------------------------------------------------------

Rational mod1(const Rational& x) {
    mpz_class f;
    mpz_fdiv_q(f.get_mpz_t(), x.get_num().get_mpz_t(), x.get_den().get_mpz_t());
    return x - Rational(f);
}

BigFloat mod1(const BigFloat& x) {
    if (!x.is_finite()) throw internal_error("mod1 of non-finite value");
    // x - floor(x) is exact at x's precision: the fractional part occupies the
    // low mantissa bits of x, so no rounding occurs and the result is in [0,1).
    BigFloat r = x - floor(x);
    if (r.sign() < 0 || r >= BigFloat(1)) throw internal_error("mod1 out of range");
    return r;
}

double to_double(const Rational& q) {
    mpfr_t t;
    mpfr_init2(t, 53);
    mpfr_set_q(t, q.get_mpq_t(), MPFR_RNDN);
    double d = mpfr_get_d(t, MPFR_RNDN);
    mpfr_clear(t);
    return d;
}

double log2d(const Rational& q) {
    int s = mpq_sgn(q.get_mpq_t());
    if (s == 0) return -HUGE_VAL;
    if (s < 0) return std::nan("");
    mpfr_t t;
    mpfr_init2(t, 96);
    mpfr_set_q(t, q.get_mpq_t(), MPFR_RNDN);
    mpfr_log2(t, t, MPFR_RNDN);
    double d = mpfr_get_d(t, MPFR_RNDN);
    mpfr_clear(t);
    return d;
}

double log2d(const BigFloat& x) {
    if (x.is_zero()) return -HUGE_VAL;
    if (x.sign() < 0) return std::nan("");
    mpfr_t t;
    mpfr_init2(t, 96);
    mpfr_log2(t, x.get(), MPFR_RNDN);
    double d = mpfr_get_d(t, MPFR_RNDN);
    mpfr_clear(t);
    return d;
}

BigFloat log2_bf(const Rational& q, long prec) {
    if (mpq_sgn(q.get_mpq_t()) <= 0) throw internal_error("log2 of non-positive rational");
    BigFloat t = BigFloat::with_precision(prec + 32);
    mpfr_set_q(t.get(), q.get_mpq_t(), MPFR_RNDN);
    BigFloat r = BigFloat::with_precision(prec);
    mpfr_log2(r.get(), t.get(), MPFR_RNDN);
    return r;
}

BigFloat log2_bf(const BigFloat& x, long prec) {
    if (x.sign() <= 0) throw internal_error("log2 of non-positive value");
    BigFloat r = BigFloat::with_precision(prec);
    mpfr_log2(r.get(), x.get(), MPFR_RNDN);
    return r;
}

mpz_class floor_to_mpz(const Rational& q) {
    mpz_class f;
    mpz_fdiv_q(f.get_mpz_t(), q.get_num().get_mpz_t(), q.get_den().get_mpz_t());
    return f;
}

mpz_class floor_to_mpz(const BigFloat& x) {
    if (!x.is_finite()) throw internal_error("floor of non-finite value");
    mpz_class f;
    mpfr_get_z(f.get_mpz_t(), x.get(), MPFR_RNDD);
    return f;
}

Rational mul_pow2(const Rational& x, long k) {
    Rational r;
    if (k >= 0)
        mpq_mul_2exp(r.get_mpq_t(), x.get_mpq_t(), static_cast<unsigned long>(k));
    else
        mpq_div_2exp(r.get_mpq_t(), x.get_mpq_t(), static_cast<unsigned long>(-k));
    return r;
}

template <>
BigFloat scalar_from_dyadic<BigFloat>(const Dyadic& d) {
    long p = std::max({BigFloat::default_precision(), d.bits, 2L});
    BigFloat r = BigFloat::with_precision(p);
    mpfr_set_z(r.get(), d.num.get_mpz_t(), MPFR_RNDN);  // exact: num < 2^bits <= 2^p
    mpfr_mul_2si(r.get(), r.get(), -d.bits, MPFR_RNDN);  // exact
    return r;
}

}  // namespace pm
