#pragma once

// Statistical experiments on the contraction process. The decoder's log gain
// per step, L = -log2 D_lambda[FInv(.|Y)](V) with V uniform and Y a channel
// output draw, drives everything here: its small-window limit is the mutual
// information, its partial sums form the random walk the rate results live
// on, and its tail obeys the 9/a maximal-stretch bound.

#include "pm/codec.hpp"
#include "pm/kernel.hpp"
#include "pm/stats.hpp"

#include <string>
#include <vector>

namespace pm {

struct ContractionSample {
    double value = 0;   // -log2 D
    double lambda = 0;
    long y_idx = -1;    // finite channel
    double y_val = 0;   // gaussian channel
    double v = 0;       // evaluation point
};

// Joint (V, Y) draws of the contraction coefficient at one window width.
// Finite channels evaluate window measures exactly in rationals; the gaussian
// path runs in double precision (its ~2^-50 evaluation error is far below
// the statistical noise of any consumer).
std::vector<ContractionSample> sample_contraction(const ChannelSpec& ch, double lambda,
                                                  long n_samples, RandomStream rng);

struct LambdaCurvePoint {
    double lambda = 0;
    double mean = 0;
    double se = 0;
    double moment_2pd = 0;  // mean |value|^(2+delta), the moment the family bound caps
    long n = 0;
};
struct LambdaCurve {
    std::vector<LambdaCurvePoint> points;
    double mutual_information = 0;  // the small-window limit to compare against
    double delta = 1;
};
LambdaCurve lambda_curve(const ChannelSpec& ch, const std::vector<double>& lambdas, long n_samples,
                         RandomStream rng, double delta = 1.0);

// Empirical continuity of the curve: max over adjacent grid pairs of
// |mean_i - mean_{i+1}| - 5 (se_i + se_{i+1}). Nonpositive means every
// neighboring pair agrees within its combined sampling error band.
double curve_continuity_excess(const LambdaCurve& c);

// Random-walk view of one decode: S_k is the telescoped contraction through
// step k, so S_n equals n * R_n up to floating-point rounding.
struct WalkTrace {
    std::vector<double> s;  // S_0 .. S_n
    double t = 0;
    long visits_below = 0;  // N_{t,n} = #{1 <= k <= n : S_k < t}
};

template <class S>
WalkTrace walk_trace(const DecodeResultT<S>& r, double t) {
    WalkTrace w;
    w.t = t;
    w.s.reserve(r.contractions.size());
    double sum = 0, c = 0;  // Kahan, to keep the telescoped identity tight
    for (double l : r.contractions) {
        double y = l - c;
        double s2 = sum + y;
        c = (s2 - sum) - y;
        sum = s2;
        w.s.push_back(sum);
    }
    for (std::size_t k = 1; k < w.s.size(); ++k)
        if (w.s[k] < t) ++w.visits_below;
    return w;
}

struct HlRow {
    double a = 0;
    double lhs = 0;     // empirical Pr(grid max stretch > a)
    double lhs_se = 0;
    double rhs = 0;     // (9/a) E|g'|
    bool pass = true;   // lhs <= rhs + 3 se
};
struct HlReport {
    std::string map_name;
    double expected_abs_deriv = 0;
    std::vector<HlRow> rows;
    bool pass = true;
};
// Maximal-stretch tail of a monotone map at a uniform point: empirical
// Pr(sup_lambda D_lambda > a) against (9/a) E|g'|, with E|g'| supplied
// analytically by the caller.
HlReport hl_tail_test(const MonotoneMap& g, double expected_abs_deriv,
                      const std::vector<double>& a_list, long n_samples,
                      const std::vector<double>& lambda_grid, RandomStream rng);

// Standard map battery for the stretch-tail bound: identity, x^2, and the
// channel's inverse kernels (every reachable output for a finite channel,
// capped at four; y in {-1, 0, 1} for the gaussian one). e_abs_deriv is the
// exact integral of |g'|; lipschitz is a known Lipschitz constant, 0 if none.
struct StretchMapCase {
    MonotoneMap map;
    double e_abs_deriv = 1;
    double lipschitz = 0;
};
std::vector<StretchMapCase> standard_stretch_maps(const ChannelSpec& ch);

struct RateSweepRow {
    long n = 0;
    double mean_rate = 0;
    double se = 0;
    double frac_above = 0;  // fraction of trials with R_n > threshold
    double frac_se = 0;
    long trials = 0;
    std::vector<double> rates;
};
struct RateSweepTable {
    std::string channel_hash;
    double mutual_information = 0;
    double threshold = 0;  // I - epsilon
    std::vector<RateSweepRow> rows;
};
RateSweepTable rate_sweep(const ChannelSpec& ch, const Rational& p_e, double epsilon,
                          const std::vector<long>& n_list, long trials, const Seeds& seeds);

// Long-format result row shared by the CLI's CSV outputs.
struct CsvRow {
    std::string name;
    std::string channel_hash;
    long n = 0;
    double lambda = 0;
    double mean = 0;
    double stderr_ = 0;
    double p_value = 1;
    bool pass = true;
};
std::string csv_to_string(const std::vector<CsvRow>& rows);
void write_csv(const std::string& path, const std::vector<CsvRow>& rows);

}  // namespace pm
