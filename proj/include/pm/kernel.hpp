#pragma once

// Matched-encoding kernels. The encoder's recursion needs, per output y, the
// posterior CDF of the message point, theta -> F_{Theta|Y}(theta | y), and the
// decoder needs its generalized inverse v -> inf{theta : F(theta|y) > v}.
//
// Finite channel: the map is piecewise linear. Input x owns the segment
// [b_x, b_{x+1}) with b_x the input pmf prefix sum, and on that segment the
// slope is W(y|x)/P_Y(y), i.e. the posterior-to-prior ratio of x given y.
// Everything is exact in rational arithmetic.
//
// Gaussian channel with input budget P and noise variance N: the matched
// input is X = sqrt(P) * PhiInv(theta), and with a = P/(P+N),
// sigma^2 = PN/(P+N):
//   F(theta|y)    = Phi((sqrt(P) PhiInv(theta) - a y) / sigma)
//   FInv(v|y)     = Phi((sigma PhiInv(v) + a y) / sqrt(P))
// evaluated in MPFR at the kernel's working precision; CDF arguments are
// clamped to [2^-(prec-8), 1 - 2^-(prec-8)] before PhiInv.

#include "pm/channel.hpp"
#include "pm/normal.hpp"
#include "pm/numeric.hpp"
#include "pm/random.hpp"

#include <algorithm>
#include <functional>
#include <string>
#include <vector>

namespace pm {

template <class S>
struct DmcKernelT {
    using Scalar = S;
    using Input = long;
    using Output = long;

    std::vector<S> breaks;                // b_0 = 0 < ... < b_K = 1
    std::vector<std::vector<S>> cum;      // cum[y][i] = F(b_i | y)
    std::vector<std::vector<S>> slope;    // slope[y][i] on segment i
    std::vector<S> out_pmf;               // P_Y
    std::vector<bool> reachable;          // P_Y(y) > 0

    std::size_t num_inputs() const { return breaks.size() - 1; }
    std::size_t num_outputs() const { return cum.size(); }

    // Segment owning theta; segments are half-open, so this is the symbol the
    // encoder sends. Requires theta in [0,1).
    long input_of(const S& theta) const {
        if (theta < S(0) || theta >= S(1)) throw internal_error("theta outside [0,1)");
        auto it = std::upper_bound(breaks.begin(), breaks.end(), theta);
        return static_cast<long>(it - breaks.begin()) - 1;
    }

    S eval_step(const S& theta, long x, long y) const {
        check_output(y);
        std::size_t i = static_cast<std::size_t>(x);
        return cum[static_cast<std::size_t>(y)][i] +
               slope[static_cast<std::size_t>(y)][i] * (theta - breaks[i]);
    }

    S eval(const S& theta, long y) const {
        if (theta == S(1)) {
            check_output(y);
            return S(1);
        }
        return eval_step(theta, input_of(theta), y);
    }

    // inf{theta : F(theta|y) > v}; skips any flat segments below v. Requires
    // v in [0,1].
    S inverse(const S& v, long y) const {
        check_output(y);
        if (v < S(0) || v > S(1)) throw internal_error("inverse argument outside [0,1]");
        const auto& c = cum[static_cast<std::size_t>(y)];
        if (v == S(1)) return S(1);
        // least j with c[j+1] > v; exists since c.back() == 1 > v
        auto it = std::upper_bound(c.begin() + 1, c.end(), v);
        std::size_t j = static_cast<std::size_t>(it - c.begin()) - 1;
        const S& sl = slope[static_cast<std::size_t>(y)][j];
        if (sl <= S(0)) throw internal_error("flat segment selected by inverse");
        return breaks[j] + (v - c[j]) / sl;
    }

    double max_abs_log2_slope() const {
        double m = 0;
        for (std::size_t y = 0; y < num_outputs(); ++y) {
            if (!reachable[y]) continue;
            for (const S& s : slope[y]) {
                if (s <= S(0)) continue;
                m = std::max(m, std::fabs(log2d(s)));
            }
        }
        return m;
    }

  private:
    void check_output(long y) const {
        if (y < 0 || static_cast<std::size_t>(y) >= num_outputs())
            throw internal_error("output symbol out of range");
        if (!reachable[static_cast<std::size_t>(y)])
            throw internal_error("kernel evaluated on unreachable output");
    }
};

using DmcKernel = DmcKernelT<Rational>;

DmcKernel build_dmc_kernel(const ChannelSpec& ch);
DmcKernelT<BigFloat> to_bigfloat_kernel(const DmcKernel& k, long prec);

struct AwgnKernel {
    using Scalar = BigFloat;
    using Input = BigFloat;
    using Output = BigFloat;

    long prec = 256;
    Rational power_q, noise_q;
    BigFloat sqrt_p, coef_a, sigma;     // at prec + 64
    BigFloat clamp_lo, clamp_hi;        // [2^-(prec-8), 1 - 2^-(prec-8)]
    double sqrt_p_d = 0, coef_a_d = 0, sigma_d = 0;

    BigFloat clamp(const BigFloat& t) const;
    BigFloat input_of(const BigFloat& theta) const;  // sqrt(P) PhiInv(theta)
    BigFloat eval_step(const BigFloat& theta, const BigFloat& x, const BigFloat& y) const;
    BigFloat eval(const BigFloat& theta, const BigFloat& y) const;
    BigFloat inverse(const BigFloat& v, const BigFloat& y) const;

    // Double-precision path for statistical estimators (never used by the
    // codec, whose guarantees are precision-budgeted).
    double eval_d(double theta, double y) const;
    double inverse_d(double v, double y) const;
    double inverse_deriv_d(double v, double y) const;  // d/dv FInv(v|y)
};

AwgnKernel build_awgn_kernel(const ChannelSpec& ch, long prec);

// Working-precision budget for a horizon-n run: 128 slack bits plus the
// worst-case per-step log-stretch of the decoder maps (finite channel: the
// largest |log2 slope|; Gaussian: 4 bits per step).
long default_precision_budget(const ChannelSpec& ch, long n);

// ---------------------------------------------------------------------------
// Window-stretch analysis of monotone circle maps.

// Monotone map on [0,1]. The double evaluator is required; the exact one is
// optional and enables exact window measures for finite-channel kernels.
struct MonotoneMap {
    std::function<double(double)> f;
    std::function<Rational(const Rational&)> f_exact;
    std::string name;
};

MonotoneMap identity_map();
MonotoneMap dmc_inverse_map(const DmcKernel& k, long y);
MonotoneMap awgn_inverse_map(const AwgnKernel& k, double y);

namespace detail {

// Measure of g([x - l/2, x + l/2] mod 1) for monotone g via endpoint images.
// When the window wraps, the image is the union of two arcs which either
// merge (measure g(1)-g(0)) or stay disjoint.
template <class S, class G>
S window_image_measure(G&& g, const S& x_in, const S& lambda) {
    S x = mod1(x_in);
    S half = lambda / S(2);
    S lo = x - half, hi = x + half;
    if (!(lo < S(0)) && !(hi > S(1))) {
        S a = g(lo), b = g(hi);
        return b >= a ? S(b - a) : S(a - b);
    }
    S lo_w = lo < S(0) ? S(lo + S(1)) : lo;
    S hi_w = hi > S(1) ? S(hi - S(1)) : hi;
    S g0 = g(S(0)), g1 = g(S(1));
    bool increasing = g1 >= g0;
    S ga = g(lo_w), gb = g(hi_w);
    if (!increasing) {
        std::swap(g0, g1);
        std::swap(ga, gb);
    }
    if (gb >= ga) return g1 - g0;
    return (g1 - ga) + (gb - g0);
}

}  // namespace detail

// D_lambda[g](x): image measure of the wrapped lambda-window around x,
// divided by lambda. Requires 0 < lambda <= 1.
double smoothed_derivative(const MonotoneMap& g, double x, double lambda);
Rational smoothed_derivative_exact(const MonotoneMap& g, const Rational& x, const Rational& lambda);

// Grid maximum of D_lambda over the given lambdas; a certified lower bound
// for the supremum over lambda in (0,1).
double max_stretch(const MonotoneMap& g, double x, const std::vector<double>& grid);
std::vector<double> default_lambda_grid();

// ---------------------------------------------------------------------------
// Regularity validation.

// Strict monotonicity of every reachable posterior CDF. Finite channel: an
// exact slope scan; flat segments (zero posterior mass) are reported, since
// the decoder then over-covers instead of inverting exactly.
struct P1Report {
    bool holds = true;
    std::vector<std::string> notes;
};
P1Report validate_p1(const DmcKernel& k);
P1Report validate_p1(const AwgnKernel& k, const std::vector<double>& y_probe, int theta_points = 65);

// Uniform (2+delta)-moment of |log2 D_lambda| over the window scales: the
// estimated moments must show no significant growth as lambda shrinks.
struct P2Row {
    double lambda = 0;
    double moment = 0;
    double se = 0;
};
struct P2Report {
    double delta = 0;
    std::vector<P2Row> rows;
    bool bounded = true;
    double trend_p = 1;  // one-sided p-value for moment growth over shrinking lambda
};
P2Report validate_p2(const DmcKernel& k, double delta, const std::vector<double>& lambdas,
                     long samples, RandomStream rng);
P2Report validate_p2(const AwgnKernel& k, double delta, const std::vector<double>& lambdas,
                     long samples, RandomStream rng);

}  // namespace pm
