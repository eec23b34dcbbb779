#pragma once

#include <cstdint>
#include <vector>

namespace manet {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

// 95% (z = 1.959964) Wilson score interval for k successes out of n.
Interval wilson_interval(std::int64_t successes, std::int64_t trials, double z = 1.959963984540054);

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double std_error = 0.0;
    double r2 = 0.0;
    int points = 0;
};

// OLS of log(y) on log(x). Throws for non-positive data or fewer than 3 points.
SlopeFit slope_fit(const std::vector<double>& xs, const std::vector<double>& ys);

// OLS of y on x without any transform (same error contract apart from positivity).
SlopeFit linear_fit(const std::vector<double>& xs, const std::vector<double>& ys);

// Asymptotic Kolmogorov distribution tail P(K > x).
double kolmogorov_tail(double x);

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
    std::int64_t n = 0;
};

// One-sample KS test of the sample against Uniform(0, 1). Sorts a copy.
KsResult ks_uniform(std::vector<double> u);

// Pearson chi-square goodness of fit; expected counts must be positive.
struct ChiSquareResult {
    double statistic = 0.0;
    double dof = 0.0;
    double p_value = 1.0;
};
ChiSquareResult chi_square(const std::vector<double>& observed, const std::vector<double>& expected,
                           int fitted_parameters = 0);

// Geometric goodness of fit (support 1, 2, ...) with an unknown success probability per queue.
// Each queue's samples go through the randomized conditional probability integral transform
// (conditioning on the running sum), which yields exact uniforms; they are pooled and KS-tested.
// Queues with fewer than `min_samples` values are skipped.
KsResult geometric_ks(const std::vector<std::vector<std::int64_t>>& queue_samples, std::uint64_t seed,
                      int min_samples = 20);

double mean(const std::vector<double>& v);
double sample_stddev(const std::vector<double>& v);
// Two-sided 95% half-width from the Student t quantile.
double t_half_width(const std::vector<double>& v);

}  // namespace manet
