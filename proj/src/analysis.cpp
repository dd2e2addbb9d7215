#include "pm/analysis.hpp"

#include "pm/normal.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace pm {

namespace {

// Exact draw from a rational pmf via its cumulative sums and a 64-bit dyadic.
std::size_t draw_index(const std::vector<Rational>& cum, RandomStream& rng) {
    Rational u = rng.next_fraction(64).to_rational();
    std::size_t i = 0;
    while (i + 1 < cum.size() && !(u < cum[i])) ++i;
    return i;
}

std::vector<ContractionSample> sample_contraction_dmc(const ChannelSpec& ch, double lambda,
                                                      long n_samples, RandomStream& rng) {
    DmcKernel k = build_dmc_kernel(ch);
    std::vector<MonotoneMap> maps(k.num_outputs());
    std::vector<Rational> ycum;
    Rational acc = 0;
    for (std::size_t y = 0; y < k.num_outputs(); ++y) {
        if (k.reachable[y]) maps[y] = dmc_inverse_map(k, static_cast<long>(y));
        acc += k.out_pmf[y];
        ycum.push_back(acc);
    }
    Rational lamq(lambda);
    std::vector<ContractionSample> out;
    out.reserve(static_cast<std::size_t>(n_samples));
    for (long s = 0; s < n_samples; ++s) {
        std::size_t y = draw_index(ycum, rng);
        // 53-bit draw: the stored double is the exact evaluation point, so
        // the sample stays recomputable from (lambda, y, v) alone
        Dyadic vd = rng.next_fraction(53);
        Rational v = vd.to_rational();
        Rational d = smoothed_derivative_exact(maps[y], v, lamq);
        ContractionSample cs;
        cs.value = d > 0 ? -log2d(d) : std::numeric_limits<double>::infinity();
        cs.lambda = lambda;
        cs.y_idx = static_cast<long>(y);
        cs.v = vd.to_double();
        out.push_back(cs);
    }
    return out;
}

std::vector<ContractionSample> sample_contraction_awgn(const ChannelSpec& ch, double lambda,
                                                       long n_samples, RandomStream& rng) {
    AwgnKernel k = build_awgn_kernel(ch, 128);
    double ysd = std::sqrt(to_double(ch.power + ch.noise));
    double ycur = 0;
    MonotoneMap m;
    m.f = [&k, &ycur](double v) { return k.inverse_d(v, ycur); };
    std::vector<ContractionSample> out;
    out.reserve(static_cast<std::size_t>(n_samples));
    for (long s = 0; s < n_samples; ++s) {
        double uy = rng.next_unit();
        if (uy == 0) uy = 0x1p-53;
        ycur = ysd * phi_inv_d(uy);
        double v = rng.next_unit();
        double d = smoothed_derivative(m, v, lambda);
        ContractionSample cs;
        cs.value = d > 0 ? -std::log2(d) : std::numeric_limits<double>::infinity();
        cs.lambda = lambda;
        cs.y_val = ycur;
        cs.v = v;
        out.push_back(cs);
    }
    return out;
}

}  // namespace

std::vector<ContractionSample> sample_contraction(const ChannelSpec& ch, double lambda,
                                                  long n_samples, RandomStream rng) {
    if (!(lambda > 0) || lambda >= 1) throw config_error("window width must be in (0,1)");
    if (n_samples < 1) throw config_error("need at least one sample");
    if (ch.kind == ChannelKind::dmc) return sample_contraction_dmc(ch, lambda, n_samples, rng);
    return sample_contraction_awgn(ch, lambda, n_samples, rng);
}

LambdaCurve lambda_curve(const ChannelSpec& ch, const std::vector<double>& lambdas, long n_samples,
                         RandomStream rng, double delta) {
    if (lambdas.empty()) throw config_error("lambda list is empty");
    if (!(delta > 0)) throw config_error("moment exponent offset must be positive");
    LambdaCurve curve;
    curve.mutual_information = ch.mutual_information();
    curve.delta = delta;
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        // one substream per width, so adding widths never shifts other draws
        auto samples = sample_contraction(ch, lambdas[i], n_samples, rng.substream(i));
        std::vector<double> vals;
        vals.reserve(samples.size());
        double msum = 0;
        for (const auto& s : samples) {
            vals.push_back(s.value);
            msum += std::pow(std::fabs(s.value), 2 + delta);
        }
        MeanStderr ms = mean_stderr(vals);
        curve.points.push_back({lambdas[i], ms.mean, ms.se, msum / static_cast<double>(vals.size()), ms.n});
    }
    return curve;
}

double curve_continuity_excess(const LambdaCurve& c) {
    if (c.points.size() < 2) throw config_error("continuity needs at least two grid points");
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < c.points.size(); ++i) {
        const auto& a = c.points[i];
        const auto& b = c.points[i + 1];
        worst = std::max(worst, std::fabs(a.mean - b.mean) - 5 * (a.se + b.se));
    }
    return worst;
}

HlReport hl_tail_test(const MonotoneMap& g, double expected_abs_deriv,
                      const std::vector<double>& a_list, long n_samples,
                      const std::vector<double>& lambda_grid, RandomStream rng) {
    if (a_list.empty()) throw config_error("threshold list is empty");
    if (n_samples < 2) throw config_error("need at least 2 samples");
    HlReport rep;
    rep.map_name = g.name;
    rep.expected_abs_deriv = expected_abs_deriv;
    std::vector<double> maxima;
    maxima.reserve(static_cast<std::size_t>(n_samples));
    for (long s = 0; s < n_samples; ++s)
        maxima.push_back(max_stretch(g, rng.next_unit(), lambda_grid));
    double n = static_cast<double>(n_samples);
    for (double a : a_list) {
        if (a <= 0) throw config_error("thresholds must be positive");
        long cnt = 0;
        for (double m : maxima)
            if (m > a) ++cnt;
        HlRow row;
        row.a = a;
        row.lhs = static_cast<double>(cnt) / n;
        row.lhs_se = std::sqrt(row.lhs * (1 - row.lhs) / n);
        row.rhs = 9.0 / a * expected_abs_deriv;
        row.pass = row.lhs <= row.rhs + 3 * row.lhs_se;
        rep.rows.push_back(row);
        rep.pass = rep.pass && row.pass;
    }
    return rep;
}

std::vector<StretchMapCase> standard_stretch_maps(const ChannelSpec& ch) {
    std::vector<StretchMapCase> cases;
    cases.push_back({identity_map(), 1.0, 1.0});
    MonotoneMap sq;
    sq.f = [](double x) { return x * x; };
    sq.f_exact = [](const Rational& q) { return q * q; };
    sq.name = "square";
    cases.push_back({std::move(sq), 1.0, 2.0});
    if (ch.kind == ChannelKind::dmc) {
        DmcKernel k = build_dmc_kernel(ch);
        std::size_t added = 0;
        for (std::size_t y = 0; y < k.num_outputs() && added < 4; ++y) {
            if (!k.reachable[y]) continue;
            StretchMapCase mc;
            mc.map = dmc_inverse_map(k, static_cast<long>(y));
            Rational mass(0), min_slope(0);
            bool flat = false;
            for (std::size_t i = 0; i < k.num_inputs(); ++i) {
                const Rational& sl = k.slope[y][i];
                if (sl > 0) {
                    mass += k.breaks[i + 1] - k.breaks[i];
                    if (min_slope == 0 || sl < min_slope) min_slope = sl;
                } else {
                    flat = true;
                }
            }
            // integral of |g'| is the arc length actually traversed; flat
            // CDF segments are jumps of the inverse and contribute nothing
            mc.e_abs_deriv = to_double(mass);
            mc.lipschitz = flat ? 0.0 : to_double(1 / min_slope);
            cases.push_back(std::move(mc));
            ++added;
        }
    } else {
        AwgnKernel k = build_awgn_kernel(ch, 128);
        for (double y : {-1.0, 0.0, 1.0}) cases.push_back({awgn_inverse_map(k, y), 1.0, 0.0});
    }
    return cases;
}

namespace {

template <class K>
RateSweepTable rate_sweep_impl(const ChannelSpec& ch, const Rational& p_e, double epsilon,
                               const std::vector<long>& n_list, long trials, const Seeds& seeds) {
    RateSweepTable tab;
    tab.channel_hash = ch.hash();
    tab.mutual_information = ch.mutual_information();
    tab.threshold = tab.mutual_information - epsilon;
    for (long n : n_list) {
        K k;
        if constexpr (std::is_same_v<K, DmcKernel>)
            k = build_dmc_kernel(ch);
        else
            k = build_awgn_kernel(ch, default_precision_budget(ch, n));
        RateSweepRow row;
        row.n = n;
        row.trials = trials;
        for (long t = 0; t < trials; ++t) {
            TrialConfig cfg;
            cfg.n = n;
            cfg.target_error = p_e;
            cfg.seeds = seeds;
            cfg.trial_index = t;
            auto out = run_trial(ch, k, cfg);
            if (!out.decode.rate_defined) throw config_error("rate sweep needs horizon >= 1");
            row.rates.push_back(out.decode.rate);
        }
        MeanStderr ms = mean_stderr(row.rates);
        row.mean_rate = ms.mean;
        row.se = ms.se;
        long cnt = 0;
        for (double r : row.rates)
            if (r > tab.threshold) ++cnt;
        row.frac_above = static_cast<double>(cnt) / static_cast<double>(trials);
        row.frac_se = std::sqrt(row.frac_above * (1 - row.frac_above) / static_cast<double>(trials));
        tab.rows.push_back(std::move(row));
    }
    return tab;
}

}  // namespace

RateSweepTable rate_sweep(const ChannelSpec& ch, const Rational& p_e, double epsilon,
                          const std::vector<long>& n_list, long trials, const Seeds& seeds) {
    if (n_list.empty()) throw config_error("horizon list is empty");
    for (long n : n_list)
        if (n < 1) throw config_error("sweep horizons must be >= 1");
    if (trials < 2) throw config_error("need at least 2 trials");
    if (ch.kind == ChannelKind::dmc)
        return rate_sweep_impl<DmcKernel>(ch, p_e, epsilon, n_list, trials, seeds);
    return rate_sweep_impl<AwgnKernel>(ch, p_e, epsilon, n_list, trials, seeds);
}

namespace {

std::string fmt_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

std::string csv_to_string(const std::vector<CsvRow>& rows) {
    std::ostringstream os;
    os << "name,channel_hash,n,lambda,mean,stderr,p_value,pass\n";
    for (const auto& r : rows) {
        os << r.name << "," << r.channel_hash << "," << r.n << "," << fmt_double(r.lambda) << ","
           << fmt_double(r.mean) << "," << fmt_double(r.stderr_) << "," << fmt_double(r.p_value)
           << "," << (r.pass ? "true" : "false") << "\n";
    }
    return os.str();
}

void write_csv(const std::string& path, const std::vector<CsvRow>& rows) {
    std::ofstream out(path);
    if (!out) throw config_error("cannot write csv: " + path);
    out << csv_to_string(rows);
}

}  // namespace pm
