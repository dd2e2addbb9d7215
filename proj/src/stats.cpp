#include "pm/stats.hpp"

#include "pm/numeric.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace pm {

MeanStderr mean_stderr(const std::vector<double>& xs) {
    MeanStderr r;
    r.n = static_cast<long>(xs.size());
    if (r.n == 0) return r;
    double s = 0;
    for (double x : xs) s += x;
    r.mean = s / static_cast<double>(r.n);
    if (r.n < 2) return r;
    double ss = 0;
    for (double x : xs) ss += (x - r.mean) * (x - r.mean);
    double var = ss / static_cast<double>(r.n - 1);
    r.se = std::sqrt(var / static_cast<double>(r.n));
    return r;
}

double ks_pvalue(double d, double n_effective) {
    if (d <= 0) return 1;
    double rn = std::sqrt(n_effective);
    double z = d * (rn + 0.12 + 0.11 / rn);
    if (z < 0.2) return 1;
    if (z < 1.18) {
        // complementary expansion, accurate for small z
        double t = std::exp(-M_PI * M_PI / (8 * z * z));
        double p_inside = std::sqrt(2 * M_PI) / z * (t + std::pow(t, 9) + std::pow(t, 25));
        return std::clamp(1 - p_inside, 0.0, 1.0);
    }
    double sum = 0;
    for (int j = 1; j <= 100; ++j) {
        double term = 2 * std::pow(-1.0, j - 1) * std::exp(-2.0 * j * j * z * z);
        sum += term;
        if (std::fabs(term) < 1e-12) break;
    }
    return std::clamp(sum, 0.0, 1.0);
}

KsResult ks_test_uniform(std::vector<double> xs) {
    if (xs.empty()) throw config_error("ks test needs samples");
    std::sort(xs.begin(), xs.end());
    double n = static_cast<double>(xs.size());
    double d = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double u = std::clamp(xs[i], 0.0, 1.0);
        double hi = (static_cast<double>(i) + 1) / n - u;
        double lo = u - static_cast<double>(i) / n;
        d = std::max({d, hi, lo});
    }
    return {d, ks_pvalue(d, n)};
}

Chi2Result chi_square_gof(const std::vector<long>& counts, const std::vector<double>& probs) {
    if (counts.size() != probs.size() || counts.empty())
        throw config_error("chi-square needs matching counts and probabilities");
    long total = 0;
    for (long c : counts) {
        if (c < 0) throw config_error("negative count");
        total += c;
    }
    if (total == 0) throw config_error("chi-square needs observations");
    Chi2Result r;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (probs[i] <= 0) {
            if (counts[i] > 0) {
                r.stat = std::numeric_limits<double>::infinity();
                r.p = 0;
            }
            continue;
        }
        double e = probs[i] * static_cast<double>(total);
        double d = static_cast<double>(counts[i]) - e;
        r.stat += d * d / e;
        ++r.dof;
    }
    r.dof -= 1;
    if (r.dof < 1) throw config_error("chi-square needs at least two cells with mass");
    if (std::isfinite(r.stat))
        r.p = boost::math::gamma_q(static_cast<double>(r.dof) / 2, r.stat / 2);
    return r;
}

Chi2Result chi_square_independence(const std::vector<std::vector<long>>& table) {
    if (table.empty() || table[0].empty()) throw config_error("independence test needs a table");
    std::size_t nc = table[0].size();
    std::vector<double> row_sum(table.size(), 0), col_sum(nc, 0);
    double total = 0;
    for (std::size_t i = 0; i < table.size(); ++i) {
        if (table[i].size() != nc) throw config_error("ragged contingency table");
        for (std::size_t j = 0; j < nc; ++j) {
            if (table[i][j] < 0) throw config_error("negative count");
            double c = static_cast<double>(table[i][j]);
            row_sum[i] += c;
            col_sum[j] += c;
            total += c;
        }
    }
    if (total == 0) throw config_error("independence test needs observations");
    long rows = 0, cols = 0;
    for (double s : row_sum)
        if (s > 0) ++rows;
    for (double s : col_sum)
        if (s > 0) ++cols;
    Chi2Result r;
    r.dof = (rows - 1) * (cols - 1);
    if (r.dof < 1) throw config_error("independence test needs two occupied rows and columns");
    for (std::size_t i = 0; i < table.size(); ++i) {
        if (row_sum[i] == 0) continue;
        for (std::size_t j = 0; j < nc; ++j) {
            if (col_sum[j] == 0) continue;
            double e = row_sum[i] * col_sum[j] / total;
            double d = static_cast<double>(table[i][j]) - e;
            r.stat += d * d / e;
        }
    }
    r.p = boost::math::gamma_q(static_cast<double>(r.dof) / 2, r.stat / 2);
    return r;
}

KsResult two_sample_ks(std::vector<double> xs, std::vector<double> ys) {
    if (xs.empty() || ys.empty()) throw config_error("two-sample ks needs samples");
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    double nx = static_cast<double>(xs.size()), ny = static_cast<double>(ys.size());
    std::size_t i = 0, j = 0;
    double d = 0;
    while (i < xs.size() && j < ys.size()) {
        double v = std::min(xs[i], ys[j]);
        while (i < xs.size() && xs[i] <= v) ++i;  // consume ties on both sides
        while (j < ys.size() && ys[j] <= v) ++j;
        double f1 = static_cast<double>(i) / nx;
        double f2 = static_cast<double>(j) / ny;
        d = std::max(d, std::fabs(f1 - f2));
    }
    double ne = nx * ny / (nx + ny);
    return {d, ks_pvalue(d, ne)};
}

double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 2) throw config_error("pearson needs paired samples");
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= static_cast<double>(xs.size());
    my /= static_cast<double>(xs.size());
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double a = xs[i] - mx, b = ys[i] - my;
        sxy += a * b;
        sxx += a * a;
        syy += b * b;
    }
    if (sxx == 0 || syy == 0) return 0;
    return sxy / std::sqrt(sxx * syy);
}

namespace {

double lag_correlation(const std::vector<double>& xs, long lag) {
    std::vector<double> a(xs.begin(), xs.end() - lag);
    std::vector<double> b(xs.begin() + lag, xs.end());
    return pearson(a, b);
}

}  // namespace

double serial_permutation_pvalue(const std::vector<double>& xs, long lag, long n_perm,
                                 RandomStream& rng) {
    if (lag < 1 || static_cast<std::size_t>(lag) + 2 > xs.size())
        throw config_error("bad lag for serial test");
    double obs = std::fabs(lag_correlation(xs, lag));
    std::vector<double> perm = xs;
    long exceed = 0;
    for (long t = 0; t < n_perm; ++t) {
        for (std::size_t i = perm.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(rng.next_below(i));
            std::swap(perm[i - 1], perm[j]);
        }
        if (std::fabs(lag_correlation(perm, lag)) >= obs) ++exceed;
    }
    return static_cast<double>(exceed + 1) / static_cast<double>(n_perm + 1);
}

SlopeTest ols_slope_test(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 3) throw config_error("slope test needs >= 3 points");
    double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0) throw config_error("slope test needs distinct x values");
    SlopeTest r;
    r.slope = sxy / sxx;
    double rss = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double resid = y[i] - my - r.slope * (x[i] - mx);
        rss += resid * resid;
    }
    double se2 = rss / (n - 2) / sxx;
    if (se2 <= 0) {  // perfect fit
        r.t = r.slope == 0 ? 0 : (r.slope > 0 ? HUGE_VAL : -HUGE_VAL);
        r.p_greater = r.slope > 0 ? 0 : 1;
        r.p_less = r.slope < 0 ? 0 : 1;
        return r;
    }
    r.t = r.slope / std::sqrt(se2);
    boost::math::students_t dist(n - 2);
    r.p_greater = boost::math::cdf(boost::math::complement(dist, r.t));
    r.p_less = boost::math::cdf(dist, r.t);
    return r;
}

}  // namespace pm
