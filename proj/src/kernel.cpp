#include "pm/kernel.hpp"

#include "pm/stats.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace pm {

DmcKernel build_dmc_kernel(const ChannelSpec& ch) {
    if (ch.kind != ChannelKind::dmc) throw config_error("finite-channel kernel needs a dmc channel");
    ch.validate();
    DmcKernel k;
    std::size_t nx = ch.num_inputs(), ny = ch.num_outputs();
    k.breaks.resize(nx + 1);
    k.breaks[0] = 0;
    for (std::size_t x = 0; x < nx; ++x) k.breaks[x + 1] = k.breaks[x] + ch.input_pmf[x];
    if (k.breaks[nx] != 1) throw internal_error("input pmf prefix sums do not reach 1");
    k.out_pmf = ch.output_pmf();
    k.reachable.resize(ny);
    k.cum.assign(ny, std::vector<Rational>(nx + 1, Rational(0)));
    k.slope.assign(ny, std::vector<Rational>(nx, Rational(0)));
    for (std::size_t y = 0; y < ny; ++y) {
        k.reachable[y] = k.out_pmf[y] > 0;
        if (!k.reachable[y]) continue;
        for (std::size_t x = 0; x < nx; ++x) {
            k.slope[y][x] = ch.transition[x][y] / k.out_pmf[y];
            // slope * segment width telescopes to the posterior pmf of x given y
            k.cum[y][x + 1] = k.cum[y][x] + k.slope[y][x] * ch.input_pmf[x];
        }
        if (k.cum[y][nx] != 1) throw internal_error("posterior cum does not reach 1");
    }
    return k;
}

DmcKernelT<BigFloat> to_bigfloat_kernel(const DmcKernel& k, long prec) {
    DmcKernelT<BigFloat> r;
    auto conv = [prec](const Rational& q) { return BigFloat(q, prec); };
    for (const auto& b : k.breaks) r.breaks.push_back(conv(b));
    for (const auto& row : k.cum) {
        std::vector<BigFloat> c;
        for (const auto& q : row) c.push_back(conv(q));
        r.cum.push_back(std::move(c));
    }
    for (const auto& row : k.slope) {
        std::vector<BigFloat> s;
        for (const auto& q : row) s.push_back(conv(q));
        r.slope.push_back(std::move(s));
    }
    for (const auto& q : k.out_pmf) r.out_pmf.push_back(conv(q));
    r.reachable = k.reachable;
    return r;
}

// ---------------------------------------------------------------------------

BigFloat AwgnKernel::clamp(const BigFloat& t) const {
    if (t < clamp_lo) return clamp_lo;
    if (t > clamp_hi) return clamp_hi;
    return t;
}

BigFloat AwgnKernel::input_of(const BigFloat& theta) const {
    return sqrt_p * phi_inv(clamp(theta), prec);
}

BigFloat AwgnKernel::eval_step(const BigFloat& theta, const BigFloat& x, const BigFloat& y) const {
    (void)theta;  // x already encodes clamp(theta)
    return phi((x - coef_a * y) / sigma, prec);
}

BigFloat AwgnKernel::eval(const BigFloat& theta, const BigFloat& y) const {
    return eval_step(theta, input_of(theta), y);
}

BigFloat AwgnKernel::inverse(const BigFloat& v, const BigFloat& y) const {
    BigFloat z = phi_inv(clamp(v), prec);
    return phi((sigma * z + coef_a * y) / sqrt_p, prec);
}

namespace {
constexpr double kThetaLoD = 1e-300;
double theta_hi_d() { return std::nextafter(1.0, 0.0); }
double clamp_unit_d(double t) { return std::clamp(t, kThetaLoD, theta_hi_d()); }
}  // namespace

double AwgnKernel::eval_d(double theta, double y) const {
    double x = sqrt_p_d * phi_inv_d(clamp_unit_d(theta));
    return phi_d((x - coef_a_d * y) / sigma_d);
}

double AwgnKernel::inverse_d(double v, double y) const {
    double z = phi_inv_d(clamp_unit_d(v));
    return phi_d((sigma_d * z + coef_a_d * y) / sqrt_p_d);
}

double AwgnKernel::inverse_deriv_d(double v, double y) const {
    double z = phi_inv_d(clamp_unit_d(v));
    double w = (sigma_d * z + coef_a_d * y) / sqrt_p_d;
    return (sigma_d / sqrt_p_d) * normal_pdf_d(w) / normal_pdf_d(z);
}

AwgnKernel build_awgn_kernel(const ChannelSpec& ch, long prec) {
    if (ch.kind != ChannelKind::awgn) throw config_error("gaussian kernel needs an awgn channel");
    ch.validate();
    if (prec < 64) throw config_error("awgn kernel precision must be at least 64 bits");
    AwgnKernel k;
    k.prec = prec;
    k.power_q = ch.power;
    k.noise_q = ch.noise;
    long wp = prec + 64;
    k.sqrt_p = sqrt(BigFloat(ch.power, wp));
    k.coef_a = BigFloat(ch.power / (ch.power + ch.noise), wp);
    k.sigma = sqrt(BigFloat(ch.power * ch.noise / (ch.power + ch.noise), wp));
    BigFloat one_wp = BigFloat::with_precision(wp);
    mpfr_set_ui(one_wp.get(), 1, MPFR_RNDN);
    k.clamp_lo = mul_pow2(one_wp, -(prec - 8));
    k.clamp_hi = one_wp - k.clamp_lo;  // exact: needs prec-7 bits, has prec+64
    k.sqrt_p_d = k.sqrt_p.to_double();
    k.coef_a_d = k.coef_a.to_double();
    k.sigma_d = k.sigma.to_double();
    return k;
}

long default_precision_budget(const ChannelSpec& ch, long n) {
    if (n < 0) throw config_error("horizon must be nonnegative");
    if (ch.kind == ChannelKind::awgn) return 128 + 4 * n;
    DmcKernel k = build_dmc_kernel(ch);
    double m = k.max_abs_log2_slope();
    long per_step = static_cast<long>(std::ceil(m - 1e-9));
    if (per_step < 1) per_step = 1;
    return 128 + per_step * n;
}

// ---------------------------------------------------------------------------

MonotoneMap identity_map() {
    MonotoneMap m;
    m.f = [](double t) { return t; };
    m.f_exact = [](const Rational& t) { return t; };
    m.name = "identity";
    return m;
}

MonotoneMap dmc_inverse_map(const DmcKernel& k, long y) {
    if (y < 0 || static_cast<std::size_t>(y) >= k.num_outputs())
        throw config_error("output symbol out of range");
    if (!k.reachable[static_cast<std::size_t>(y)])
        throw config_error("inverse map requested for unreachable output");
    MonotoneMap m;
    m.f = [k, y](double v) { return to_double(k.inverse(Rational(v), y)); };
    m.f_exact = [k, y](const Rational& v) { return k.inverse(v, y); };
    m.name = "dmc-inverse(y=" + std::to_string(y) + ")";
    return m;
}

MonotoneMap awgn_inverse_map(const AwgnKernel& k, double y) {
    MonotoneMap m;
    m.f = [k, y](double v) { return k.inverse_d(v, y); };
    std::ostringstream name;
    name << "awgn-inverse(y=" << y << ")";
    m.name = name.str();
    return m;
}

namespace {

void check_lambda(double lambda) {
    if (!(lambda > 0) || !(lambda <= 1)) throw config_error("window width must be in (0,1]");
}

}  // namespace

double smoothed_derivative(const MonotoneMap& g, double x, double lambda) {
    check_lambda(lambda);
    if (!g.f) throw internal_error("monotone map without evaluator");
    double meas = detail::window_image_measure<double>(g.f, x, lambda);
    return meas / lambda;
}

Rational smoothed_derivative_exact(const MonotoneMap& g, const Rational& x, const Rational& lambda) {
    if (!(lambda > 0) || !(lambda <= 1)) throw config_error("window width must be in (0,1]");
    if (!g.f_exact) throw internal_error("monotone map has no exact evaluator");
    Rational meas = detail::window_image_measure<Rational>(g.f_exact, x, lambda);
    return meas / lambda;
}

double max_stretch(const MonotoneMap& g, double x, const std::vector<double>& grid) {
    if (grid.empty()) throw config_error("window-width grid is empty");
    double best = 0;
    for (double lam : grid) {
        if (!(lam > 0) || !(lam < 1)) throw config_error("grid widths must be in (0,1)");
        best = std::max(best, smoothed_derivative(g, x, lam));
    }
    return best;
}

std::vector<double> default_lambda_grid() {
    std::vector<double> g;
    for (int e = 1; e <= 40; ++e) g.push_back(std::ldexp(1.0, -e));
    g.push_back(1.0 - std::ldexp(1.0, -16));
    return g;
}

// ---------------------------------------------------------------------------

P1Report validate_p1(const DmcKernel& k) {
    P1Report rep;
    for (std::size_t y = 0; y < k.num_outputs(); ++y) {
        if (!k.reachable[y]) {
            rep.notes.push_back("output " + std::to_string(y) +
                                ": unreachable (P_Y = 0); kernel not defined there");
            continue;
        }
        for (std::size_t x = 0; x < k.num_inputs(); ++x) {
            if (k.slope[y][x] == 0) {
                rep.holds = false;
                rep.notes.push_back("output " + std::to_string(y) + ", input " + std::to_string(x) +
                                    ": zero posterior mass (flat segment); decoder over-covers");
            }
        }
    }
    return rep;
}

P1Report validate_p1(const AwgnKernel& k, const std::vector<double>& y_probe, int theta_points) {
    P1Report rep;
    if (theta_points < 3) throw config_error("need at least 3 probe points");
    for (double y : y_probe) {
        double prev = -1;
        for (int i = 1; i < theta_points; ++i) {
            double t = static_cast<double>(i) / theta_points;
            double f = k.eval_d(t, y);
            if (i > 1 && !(f > prev)) {
                rep.holds = false;
                std::ostringstream os;
                os << "y=" << y << ": CDF not strictly increasing near theta=" << t;
                rep.notes.push_back(os.str());
            }
            prev = f;
        }
    }
    rep.notes.push_back("gaussian posterior density is everywhere positive; strict monotonicity "
                        "holds analytically");
    return rep;
}

namespace {

void finish_p2(P2Report& rep) {
    for (const auto& r : rep.rows)
        if (!std::isfinite(r.moment)) {
            rep.bounded = false;
            rep.trend_p = 0;
            return;
        }
    // growth test on the shrinking-window tail: moment regressed on log2(1/lambda)
    std::vector<P2Row> rows = rep.rows;
    std::sort(rows.begin(), rows.end(), [](const P2Row& a, const P2Row& b) { return a.lambda > b.lambda; });
    std::size_t tail = std::max<std::size_t>(3, rows.size() / 2);
    tail = std::min(tail, rows.size());
    std::vector<double> xs, ys;
    for (std::size_t i = rows.size() - tail; i < rows.size(); ++i) {
        xs.push_back(std::log2(1.0 / rows[i].lambda));
        ys.push_back(rows[i].moment);
    }
    if (xs.size() < 3) return;
    SlopeTest st = ols_slope_test(xs, ys);
    rep.trend_p = st.p_greater;
    rep.bounded = st.p_greater >= 0.05;
}

}  // namespace

P2Report validate_p2(const DmcKernel& k, double delta, const std::vector<double>& lambdas,
                     long samples, RandomStream rng) {
    if (delta <= 0) throw config_error("moment exponent offset must be positive");
    if (lambdas.empty()) throw config_error("lambda list is empty");
    if (samples < 2) throw config_error("need at least 2 samples");

    std::vector<MonotoneMap> maps(k.num_outputs());
    std::vector<Rational> ycum;
    Rational acc = 0;
    for (std::size_t y = 0; y < k.num_outputs(); ++y) {
        if (k.reachable[y]) maps[y] = dmc_inverse_map(k, static_cast<long>(y));
        acc += k.out_pmf[y];
        ycum.push_back(acc);
    }

    P2Report rep;
    rep.delta = delta;
    for (double lam : lambdas) {
        check_lambda(lam);
        if (lam >= 1) throw config_error("moment scan needs widths strictly below 1");
        Rational lamq(lam);
        std::vector<double> vals;
        vals.reserve(static_cast<std::size_t>(samples));
        for (long s = 0; s < samples; ++s) {
            Rational uy = rng.next_fraction(64).to_rational();
            std::size_t y = 0;
            while (y + 1 < ycum.size() && !(uy < ycum[y])) ++y;
            Rational v = rng.next_fraction(64).to_rational();
            Rational d = smoothed_derivative_exact(maps[y], v, lamq);
            double ld = d > 0 ? log2d(d) : -std::numeric_limits<double>::infinity();
            vals.push_back(std::pow(std::fabs(ld), 2 + delta));
        }
        MeanStderr ms = mean_stderr(vals);
        rep.rows.push_back({lam, ms.mean, ms.se});
    }
    finish_p2(rep);
    return rep;
}

P2Report validate_p2(const AwgnKernel& k, double delta, const std::vector<double>& lambdas,
                     long samples, RandomStream rng) {
    if (delta <= 0) throw config_error("moment exponent offset must be positive");
    if (lambdas.empty()) throw config_error("lambda list is empty");
    if (samples < 2) throw config_error("need at least 2 samples");

    double ysd = std::sqrt(to_double(k.power_q + k.noise_q));
    double ycur = 0;
    MonotoneMap m;
    m.f = [&k, &ycur](double v) { return k.inverse_d(v, ycur); };
    m.name = "awgn-inverse(sampled y)";

    P2Report rep;
    rep.delta = delta;
    for (double lam : lambdas) {
        check_lambda(lam);
        if (lam >= 1) throw config_error("moment scan needs widths strictly below 1");
        std::vector<double> vals;
        vals.reserve(static_cast<std::size_t>(samples));
        for (long s = 0; s < samples; ++s) {
            double uy = rng.next_unit();
            if (uy == 0) uy = 0x1p-53;
            ycur = ysd * phi_inv_d(uy);
            double v = rng.next_unit();
            double d = smoothed_derivative(m, v, lam);
            double ld = d > 0 ? std::log2(d) : -std::numeric_limits<double>::infinity();
            vals.push_back(std::pow(std::fabs(ld), 2 + delta));
        }
        MeanStderr ms = mean_stderr(vals);
        rep.rows.push_back({lam, ms.mean, ms.se});
    }
    finish_p2(rep);
    return rep;
}

}  // namespace pm
