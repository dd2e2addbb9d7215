// Acceptance gate: every stated criterion at full scale, one line per
// criterion, exit status = number of failed criteria. Each criterion pins its
// own seed triple so the runs are deterministic and mutually independent.
//
// Criteria 3 and 7 state rate targets the decoder's arc-width law cannot
// meet: the width of the decoding arc is an exact martingale, so the arc
// either escapes to zero width (probability p_e, rate -> channel
// information) or relaxes to the full circle (probability 1 - p_e, rate ->
// 0). The long-run mean rate is therefore p_e * I, far below I when p_e is
// small, and the fraction of trials above I - eps converges to p_e, not 1.
// Those criteria report their measured values and fail honestly; the rate
// notes in the README derive the dichotomy and show the matching numbers.

#include "pm/analysis.hpp"
#include "pm/channel.hpp"
#include "pm/codec.hpp"
#include "pm/kernel.hpp"
#include "pm/normal.hpp"
#include "pm/stats.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

using namespace pm;

namespace {

std::string chpath(const char* name) {
    return std::string(PM_CHANNEL_DIR) + "/" + name + ".json";
}

struct Crit {
    bool pass = false;
    std::string detail;
};

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", x);
    return buf;
}

void progress(const char* what) { std::fprintf(stderr, "  [%s]\n", what); }

// ---------------------------------------------------------------------------
// 1. exact error probability: BSC(0.11), p_e = 0.1, n = 64, 20000 trials,
//    empirical error rate within 0.1 +- 0.0064, wall time under two minutes

Crit criterion1() {
    ChannelSpec ch = ChannelSpec::load(chpath("bsc011"));
    DmcKernel k = build_dmc_kernel(ch);
    const long trials = 20000;
    Seeds seeds{11, 12, 13};
    auto t0 = std::chrono::steady_clock::now();
    long errors = 0;
    for (long t = 0; t < trials; ++t) {
        TrialConfig cfg;
        cfg.n = 64;
        cfg.target_error = Rational(1, 10);
        cfg.seeds = seeds;
        cfg.trial_index = t;
        if (run_trial(ch, k, cfg).error) ++errors;
        if (t % 5000 == 4999) std::fprintf(stderr, "  [criterion 1: %ld/%ld]\n", t + 1, trials);
    }
    double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    double frac = static_cast<double>(errors) / static_cast<double>(trials);
    bool in_band = std::fabs(frac - 0.1) <= 0.0064;
    bool in_time = elapsed < 120.0;
    Crit c;
    c.pass = in_band && in_time;
    c.detail = "error rate " + fmt(frac) + " vs 0.1 +- 0.0064, " + std::to_string(trials) +
               " trials in " + fmt(elapsed) + " s (limit 120 s)";
    return c;
}

// ---------------------------------------------------------------------------
// 2. deterministic invertibility: theta_0 in J_n iff theta_n in J_0, in 100%
//    of trials across four channels and n in {1, 8, 64, 256}

Crit criterion2() {
    Seeds seeds{21, 22, 23};
    const long n_list[4] = {1, 8, 64, 256};
    long checked = 0, matched = 0;
    auto run_block = [&](const ChannelSpec& ch, const auto& k, long n, long trials) {
        for (long t = 0; t < trials; ++t) {
            TrialConfig cfg;
            cfg.n = n;
            cfg.target_error = Rational(1, 10);
            cfg.seeds = seeds;
            cfg.trial_index = t + n * 100000L;
            auto out = run_trial(ch, k, cfg);
            ++checked;
            if (out.error == !out.final_in_j0) ++matched;
        }
    };
    for (const char* name : {"bsc011", "bsc025", "dmc3x3"}) {
        ChannelSpec ch = ChannelSpec::load(chpath(name));
        DmcKernel k = build_dmc_kernel(ch);
        for (long n : n_list) run_block(ch, k, n, 25);
        progress((std::string("criterion 2: ") + name).c_str());
    }
    ChannelSpec g = ChannelSpec::load(chpath("awgn_unit"));
    const long g_trials[4] = {25, 25, 10, 6};
    for (int i = 0; i < 4; ++i) {
        AwgnKernel k = build_awgn_kernel(g, default_precision_budget(g, n_list[i]));
        run_block(g, k, n_list[i], g_trials[i]);
    }
    progress("criterion 2: awgn");
    Crit c;
    c.pass = checked > 0 && matched == checked;
    c.detail = std::to_string(matched) + "/" + std::to_string(checked) +
               " trials satisfy the equivalence across 4 channels x n in {1,8,64,256}";
    return c;
}

// ---------------------------------------------------------------------------
// 3. rate convergence target: BSC(0.11), p_e = 0.05, eps = 0.1, 500 trials
//    per n in {64,128,256,512}; fraction above I - eps non-decreasing within
//    2 sigma and >= 0.9 at n = 512; mean R_512 within 0.05 of I

Crit criterion3() {
    ChannelSpec ch = ChannelSpec::load(chpath("bsc011"));
    RateSweepTable tab = rate_sweep(ch, Rational(1, 20), 0.1, {64, 128, 256, 512}, 500,
                                    Seeds{31, 32, 33});
    progress("criterion 3: sweep done");
    double I = tab.mutual_information;
    bool monotone = true;
    std::string fracs;
    for (std::size_t i = 0; i < tab.rows.size(); ++i) {
        if (i) {
            double sigma = std::hypot(tab.rows[i].frac_se, tab.rows[i - 1].frac_se);
            if (tab.rows[i].frac_above < tab.rows[i - 1].frac_above - 2 * sigma) monotone = false;
            fracs += " ";
        }
        fracs += fmt(tab.rows[i].frac_above);
    }
    const RateSweepRow& last = tab.rows.back();
    bool frac_ok = last.frac_above >= 0.9;
    bool mean_ok = std::fabs(last.mean_rate - I) <= 0.05;
    Crit c;
    c.pass = monotone && frac_ok && mean_ok;
    c.detail = "frac(R_n > I-0.1) = {" + fracs + "} (non-decreasing within 2 sigma: " +
               (monotone ? "yes" : "NO") + "), frac_512 = " + fmt(last.frac_above) +
               " vs >= 0.9, mean R_512 = " + fmt(last.mean_rate) + " +- " + fmt(last.se) +
               " vs " + fmt(I) + " +- 0.05";
    return c;
}

// ---------------------------------------------------------------------------
// 4. contraction-mean limits on BSC(0.11), 1e5 samples per point

Crit criterion4() {
    ChannelSpec ch = ChannelSpec::load(chpath("bsc011"));
    double I = ch.mutual_information();
    const long samples = 100000;
    // continuity is checked where it is checkable: on the uniform dyadic
    // grid j*2^-7, adjacent true means differ by less than the 5(se+se)
    // band at 1e5 samples; on a geometric ladder they do not
    std::vector<double> grid;
    for (int j = 1; j <= 127; ++j) grid.push_back(std::ldexp(static_cast<double>(j), -7));
    LambdaCurve curve = lambda_curve(ch, grid, samples, RandomStream::from_seed(43), 1.0);
    progress("criterion 4: uniform dyadic grid done");
    LambdaCurve tiny = lambda_curve(ch, {std::ldexp(1.0, -20)}, samples,
                                    RandomStream::from_seed(43).substream(998), 1.0);
    LambdaCurve wide =
        lambda_curve(ch, {0.999}, samples, RandomStream::from_seed(43).substream(999), 1.0);
    const LambdaCurvePoint& p_half = curve.points[63];       // lambda = 64/128
    const LambdaCurvePoint& p_tiny = tiny.points.front();    // lambda = 2^-20
    const LambdaCurvePoint& p_wide = wide.points.front();    // lambda = 0.999
    double cont = curve_continuity_excess(curve);
    bool wide_ok = std::fabs(p_wide.mean) <= 3 * p_wide.se;
    bool tiny_ok = std::fabs(p_tiny.mean - I) <= 3 * p_tiny.se;
    bool half_ok = p_half.mean >= 3 * p_half.se && p_half.mean <= I - 3 * p_half.se;
    bool cont_ok = cont <= 0;
    Crit c;
    c.pass = wide_ok && tiny_ok && half_ok && cont_ok;
    c.detail = "L(0.999) = " + fmt(p_wide.mean) + " +- " + fmt(p_wide.se) + " vs 0; L(2^-20) = " +
               fmt(p_tiny.mean) + " +- " + fmt(p_tiny.se) + " vs I = " + fmt(I) +
               "; L(0.5) = " + fmt(p_half.mean) + " +- " + fmt(p_half.se) +
               " inside (0, I); adjacent-mean continuity excess " + fmt(cont) + " (need <= 0)";
    return c;
}

// ---------------------------------------------------------------------------
// 5. marginal laws: theta_n uniform (KS) and X_n matching the input law
//    (chi-square), alpha = 0.01, n in {1,4,16,32}, 1e4 trials each

Crit criterion5() {
    ChannelSpec ch = ChannelSpec::load(chpath("bsc011"));
    DmcKernel k = build_dmc_kernel(ch);
    Seeds seeds{51, 52, 53};
    std::vector<double> probs;
    for (const Rational& q : ch.input_pmf) probs.push_back(to_double(q));
    double min_ks = 1, min_chi = 1;
    for (long n : {1L, 4L, 16L, 32L}) {
        const long trials = 10000;
        std::vector<double> thetas;
        thetas.reserve(trials);
        std::vector<long> counts(ch.num_inputs(), 0);
        for (long t = 0; t < trials; ++t) {
            TrialConfig cfg;
            cfg.n = n;
            cfg.target_error = Rational(1, 10);
            cfg.seeds = seeds;
            cfg.trial_index = t + n * 100000L;
            auto out = run_trial(ch, k, cfg);
            thetas.push_back(to_double(out.theta_final));
            ++counts[static_cast<std::size_t>(out.transcript.x_idx.back())];
        }
        min_ks = std::min(min_ks, ks_test_uniform(std::move(thetas)).p);
        min_chi = std::min(min_chi, chi_square_gof(counts, probs).p);
        std::fprintf(stderr, "  [criterion 5: n=%ld done]\n", n);
    }
    Crit c;
    c.pass = min_ks >= 0.01 && min_chi >= 0.01;
    c.detail = "min KS p = " + fmt(min_ks) + ", min chi-square p = " + fmt(min_chi) +
               " over n in {1,4,16,32} at 1e4 trials (alpha = 0.01)";
    return c;
}

// ---------------------------------------------------------------------------
// 6. maximal-stretch tail bound: Pr(grid max stretch > a) <= (9/a) E|g'| +
//    3 se at 1e5 samples for the standard map battery, and exactly zero
//    above a known Lipschitz constant

Crit criterion6() {
    const std::vector<double> a_list{2, 4, 8, 16};
    const std::vector<double> grid = default_lambda_grid();
    const long samples = 100000;
    std::vector<StretchMapCase> battery;
    for (StretchMapCase& mc : standard_stretch_maps(ChannelSpec::load(chpath("bsc011"))))
        battery.push_back(std::move(mc));
    for (StretchMapCase& mc : standard_stretch_maps(ChannelSpec::load(chpath("awgn_unit"))))
        if (mc.map.name.rfind("awgn-inverse", 0) == 0) battery.push_back(std::move(mc));
    bool all_bound = true, all_zero = true;
    double worst_margin = -1e9;
    std::string zero_fails;
    std::uint64_t tag = 0;
    for (const StretchMapCase& mc : battery) {
        HlReport rep = hl_tail_test(mc.map, mc.e_abs_deriv, a_list, samples, grid,
                                    RandomStream::from_seed(63).substream(tag++));
        for (const HlRow& row : rep.rows) {
            worst_margin = std::max(worst_margin, row.lhs - row.rhs - 3 * row.lhs_se);
            all_bound = all_bound && row.pass;
            if (mc.lipschitz > 0 && row.a >= mc.lipschitz * (1 - 1e-12) && row.lhs > 0) {
                all_zero = false;
                zero_fails += " " + rep.map_name + "@a=" + fmt(row.a);
            }
        }
        progress((std::string("criterion 6: ") + mc.map.name).c_str());
    }
    Crit c;
    c.pass = all_bound && all_zero;
    c.detail = std::to_string(battery.size()) + " maps x {2,4,8,16}: worst lhs-rhs-3se margin " +
               fmt(worst_margin) + " (need <= 0); tails above Lipschitz constants " +
               (all_zero ? "all exactly 0" : std::string("nonzero:") + zero_fails);
    return c;
}

// ---------------------------------------------------------------------------
// 7. Gaussian closed-form reduction target: mean R_256 within 0.08 of 0.5 at
//    p_e = 0.05, and the kernel matching the closed-form posterior CDF to
//    1e-9 at 1e3 random (theta, y)

Crit criterion7() {
    ChannelSpec ch = ChannelSpec::load(chpath("awgn_unit"));
    const long n = 256, trials = 60;
    AwgnKernel k = build_awgn_kernel(ch, default_precision_budget(ch, n));
    Seeds seeds{71, 72, 73};
    std::vector<double> rates;
    rates.reserve(trials);
    for (long t = 0; t < trials; ++t) {
        TrialConfig cfg;
        cfg.n = n;
        cfg.target_error = Rational(1, 20);
        cfg.seeds = seeds;
        cfg.trial_index = t;
        rates.push_back(run_trial(ch, k, cfg).decode.rate);
        if (t % 20 == 19) std::fprintf(stderr, "  [criterion 7: %ld/%ld]\n", t + 1, trials);
    }
    MeanStderr ms = mean_stderr(rates);
    bool rate_ok = std::fabs(ms.mean - 0.5) <= 0.08;

    // posterior CDF: X|Y=y is normal with mean y/2 and variance 1/2, so
    // F(theta|y) = Phi((PhiInv(theta) - y/2) / sqrt(1/2)) for P = N = 1
    RandomStream rng = RandomStream::from_seed(73);
    double worst = 0;
    for (int i = 0; i < 1000; ++i) {
        double theta = rng.next_unit();
        if (theta == 0) theta = 0x1p-53;
        double y = 6 * (rng.next_unit() - 0.5);
        double closed = phi_d((phi_inv_d(theta) - 0.5 * y) / std::sqrt(0.5));
        double got = to_double(k.eval(BigFloat(theta), BigFloat(y)));
        worst = std::max(worst, std::fabs(got - closed));
    }
    bool cdf_ok = worst < 1e-9;
    Crit c;
    c.pass = rate_ok && cdf_ok;
    c.detail = "mean R_256 = " + fmt(ms.mean) + " +- " + fmt(ms.se) + " vs 0.5 +- 0.08 (" +
               std::to_string(trials) + " trials); max closed-form posterior CDF deviation " +
               fmt(worst) + " vs 1e-9";
    return c;
}

// ---------------------------------------------------------------------------
// 8. walk diagnostics at target error 19/20 (escape regime, where the drift
//    statement has statistical power; see the rate notes in the README):
//    bucketed mean step >= -3 se with trial-clustered errors, and the
//    low-level visit counts N_{5,256} vs N_{5,512} indistinguishable by a
//    two-sample KS at alpha = 0.01 over 200 trials each

struct Step {
    double level = 0;
    double delta = 0;
    long trial = 0;
};

double clustered_se(const std::vector<const Step*>& bucket, double mean) {
    std::map<long, std::pair<double, long>> clusters;
    for (const Step* s : bucket) {
        auto& c = clusters[s->trial];
        c.first += s->delta;
        c.second += 1;
    }
    double g = static_cast<double>(clusters.size());
    if (g < 2) return std::numeric_limits<double>::infinity();
    double ss = 0;
    for (const auto& [trial, c] : clusters) {
        double r = c.first - static_cast<double>(c.second) * mean;
        ss += r * r;
    }
    double n = static_cast<double>(bucket.size());
    return std::sqrt(g / (g - 1) * ss) / n;
}

Crit criterion8() {
    ChannelSpec ch = ChannelSpec::load(chpath("bsc011"));
    DmcKernel k = build_dmc_kernel(ch);
    Seeds seeds{81, 82, 83};
    const long trials = 200;
    std::vector<Step> steps;
    std::vector<double> n5_a, n5_b;
    auto run_block = [&](long n, long index_base, std::vector<double>* n5) {
        for (long t = 0; t < trials; ++t) {
            TrialConfig cfg;
            cfg.n = n;
            cfg.target_error = Rational(19, 20);
            cfg.seeds = seeds;
            cfg.trial_index = index_base + t;
            auto out = run_trial(ch, k, cfg);
            WalkTrace w = walk_trace(out.decode, 5.0);
            n5->push_back(static_cast<double>(w.visits_below));
            for (std::size_t i = 0; i + 1 < w.s.size(); ++i)
                steps.push_back({w.s[i], w.s[i + 1] - w.s[i], cfg.trial_index});
        }
    };
    run_block(256, 0, &n5_a);
    progress("criterion 8: n=256 block done");
    run_block(512, 1000000, &n5_b);
    progress("criterion 8: n=512 block done");

    std::sort(steps.begin(), steps.end(),
              [](const Step& a, const Step& b) { return a.level < b.level; });
    const long nb = 10;
    double worst = std::numeric_limits<double>::infinity();
    std::size_t total = steps.size();
    for (long b = 0; b < nb; ++b) {
        std::size_t lo = total * static_cast<std::size_t>(b) / nb;
        std::size_t hi = total * static_cast<std::size_t>(b + 1) / nb;
        std::vector<const Step*> bucket;
        bucket.reserve(hi - lo);
        double sum = 0;
        for (std::size_t i = lo; i < hi; ++i) {
            bucket.push_back(&steps[i]);
            sum += steps[i].delta;
        }
        double mean = sum / static_cast<double>(bucket.size());
        worst = std::min(worst, mean + 3 * clustered_se(bucket, mean));
    }
    KsResult ks = two_sample_ks(n5_a, n5_b);
    bool drift_ok = worst >= -1e-9;
    bool ks_ok = ks.p >= 0.01;
    Crit c;
    c.pass = drift_ok && ks_ok;
    c.detail = "min bucket mean step + 3 clustered se = " + fmt(worst) + " over 10 buckets (" +
               std::to_string(total) + " steps); N_{5,256} vs N_{5,512} two-sample KS p = " +
               fmt(ks.p) + " (alpha = 0.01, " + std::to_string(trials) + " trials each)";
    return c;
}

// ---------------------------------------------------------------------------
// 9. numerical soundness: doubling the precision budget changes no extracted
//    bit and moves every reported rate by less than 2^-20, 50 fixed trials

Crit criterion9() {
    Seeds seeds{91, 92, 93};
    long bit_mismatch = 0, rate_drift = 0, total = 0;
    double worst_dr = 0;

    ChannelSpec bsc = ChannelSpec::load(chpath("bsc011"));
    DmcKernel dk = build_dmc_kernel(bsc);
    for (long t = 0; t < 40; ++t) {
        TrialConfig lo;
        lo.n = 32;
        lo.target_error = Rational(1, 10);
        lo.seeds = seeds;
        lo.trial_index = t;
        TrialConfig hi = lo;
        hi.precision_bits = 2 * default_precision_budget(bsc, lo.n);
        auto a = run_trial(bsc, dk, lo);
        auto b = run_trial(bsc, dk, hi);
        ++total;
        if (a.decode.bits != b.decode.bits) ++bit_mismatch;
        worst_dr = std::max(worst_dr, std::fabs(a.decode.rate - b.decode.rate));
    }
    progress("criterion 9: finite-channel block done");

    ChannelSpec g = ChannelSpec::load(chpath("awgn_unit"));
    long base = default_precision_budget(g, 16);
    AwgnKernel k_lo = build_awgn_kernel(g, base);
    AwgnKernel k_hi = build_awgn_kernel(g, 2 * base);
    for (long t = 0; t < 10; ++t) {
        TrialConfig lo;
        lo.n = 16;
        lo.target_error = Rational(1, 10);
        lo.seeds = seeds;
        lo.trial_index = t;
        TrialConfig hi = lo;
        hi.precision_bits = 2 * base;
        auto a = run_trial(g, k_lo, lo);
        auto b = run_trial(g, k_hi, hi);
        ++total;
        if (a.decode.bits != b.decode.bits) ++bit_mismatch;
        worst_dr = std::max(worst_dr, std::fabs(a.decode.rate - b.decode.rate));
    }
    progress("criterion 9: gaussian block done");
    rate_drift = worst_dr < std::ldexp(1.0, -20) ? 0 : 1;
    Crit c;
    c.pass = bit_mismatch == 0 && rate_drift == 0 && total == 50;
    c.detail = std::to_string(total) + " trials (40 finite n=32, 10 gaussian n=16): " +
               std::to_string(bit_mismatch) + " bit mismatches, max |rate drift| " +
               fmt(worst_dr) + " vs 2^-20 = " + fmt(std::ldexp(1.0, -20));
    return c;
}

}  // namespace

int main() {
    struct Entry {
        int number;
        Crit (*fn)();
    };
    const Entry entries[] = {{1, criterion1}, {2, criterion2}, {3, criterion3},
                             {4, criterion4}, {5, criterion5}, {6, criterion6},
                             {7, criterion7}, {8, criterion8}, {9, criterion9}};
    int failures = 0;
    for (const Entry& e : entries) {
        Crit c;
        try {
            c = e.fn();
        } catch (const std::exception& ex) {
            c.pass = false;
            c.detail = std::string("exception: ") + ex.what();
        }
        std::printf("criterion %d: %s — %s\n", e.number, c.pass ? "PASS" : "FAIL",
                    c.detail.c_str());
        std::fflush(stdout);
        if (!c.pass) ++failures;
    }
    std::printf("acceptance: %d/9 criteria passed\n", 9 - static_cast<int>(failures));
    return failures;
}
