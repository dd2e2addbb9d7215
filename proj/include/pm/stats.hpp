#pragma once

// Statistical tests used by the verification suites: distributional checks
// for the uniformity/independence guarantees, and mean/trend utilities for
// the contraction and rate experiments. All inputs are plain doubles; these
// run on estimator output, never inside the precision-budgeted codec.

#include "pm/random.hpp"

#include <vector>

namespace pm {

struct MeanStderr {
    double mean = 0;
    double se = 0;
    long n = 0;
};
MeanStderr mean_stderr(const std::vector<double>& xs);

struct KsResult {
    double d = 0;
    double p = 1;
};

// One-sample test against Uniform[0,1); asymptotic p-value with the standard
// finite-n correction to the Kolmogorov scaling.
KsResult ks_test_uniform(std::vector<double> xs);
double ks_pvalue(double d, double n_effective);

struct Chi2Result {
    double stat = 0;
    long dof = 0;
    double p = 1;
};
// Goodness of fit of observed counts to cell probabilities. Cells with zero
// probability must have zero counts.
Chi2Result chi_square_gof(const std::vector<long>& counts, const std::vector<double>& probs);

// Independence of the row and column variables of a contingency table.
// Empty rows/columns are dropped; dof = (rows-1)(cols-1).
Chi2Result chi_square_independence(const std::vector<std::vector<long>>& table);

// Two-sample equality-of-distribution test; tie-safe.
KsResult two_sample_ks(std::vector<double> xs, std::vector<double> ys);

double pearson(const std::vector<double>& xs, const std::vector<double>& ys);

// Two-sided permutation test for lag-k serial dependence: permutes the series
// and recomputes the lag correlation.
double serial_permutation_pvalue(const std::vector<double>& xs, long lag, long n_perm,
                                 RandomStream& rng);

struct SlopeTest {
    double slope = 0;
    double t = 0;
    double p_greater = 1;  // one-sided p-value for H1: slope > 0
    double p_less = 1;     // one-sided p-value for H1: slope < 0
};
SlopeTest ols_slope_test(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace pm
