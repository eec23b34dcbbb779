#include "manet/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "manet/random.hpp"

namespace manet {

Interval wilson_interval(std::int64_t successes, std::int64_t trials, double z)
{
    if (trials <= 0 || successes < 0 || successes > trials)
        throw std::invalid_argument("wilson_interval needs 0 <= successes <= trials, trials > 0");
    double n = static_cast<double>(trials);
    double p = successes / n;
    double z2 = z * z;
    double denom = 1.0 + z2 / n;
    double center = (p + z2 / (2.0 * n)) / denom;
    double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

SlopeFit linear_fit(const std::vector<double>& xs, const std::vector<double>& ys)
{
    if (xs.size() != ys.size()) throw std::invalid_argument("fit needs equally many x and y values");
    if (xs.size() < 3) throw std::invalid_argument("fit needs at least 3 points");
    auto n = static_cast<double>(xs.size());
    double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        sxx += (xs[k] - mx) * (xs[k] - mx);
        sxy += (xs[k] - mx) * (ys[k] - my);
        syy += (ys[k] - my) * (ys[k] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("fit needs at least two distinct x values");
    SlopeFit f;
    f.points = static_cast<int>(xs.size());
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double rss = std::max(0.0, syy - f.slope * sxy);
    f.std_error = std::sqrt(rss / (n - 2.0) / sxx);
    f.r2 = syy > 0.0 ? 1.0 - rss / syy : 1.0;
    return f;
}

SlopeFit slope_fit(const std::vector<double>& xs, const std::vector<double>& ys)
{
    std::vector<double> lx, ly;
    for (double x : xs) {
        if (!(x > 0.0)) throw std::invalid_argument("slope_fit needs positive x values");
        lx.push_back(std::log(x));
    }
    for (double y : ys) {
        if (!(y > 0.0)) throw std::invalid_argument("slope_fit needs positive y values");
        ly.push_back(std::log(y));
    }
    return linear_fit(lx, ly);
}

double kolmogorov_tail(double x)
{
    if (x <= 0.0) return 1.0;
    if (x < 1.18) {
        // small-x form converges faster: P(K <= x) = sqrt(2 pi)/x sum exp(-(2k-1)^2 pi^2 / (8 x^2))
        double s = 0.0;
        for (int k = 1; k <= 50; ++k) {
            double term = std::exp(-(2.0 * k - 1) * (2.0 * k - 1) * std::numbers::pi * std::numbers::pi / (8.0 * x * x));
            s += term;
            if (term < 1e-17) break;
        }
        return std::clamp(1.0 - std::sqrt(2.0 * std::numbers::pi) / x * s, 0.0, 1.0);
    }
    double s = 0.0;
    for (int k = 1; k <= 100; ++k) {
        double term = std::exp(-2.0 * k * k * x * x);
        s += (k % 2 ? 1.0 : -1.0) * term;
        if (term < 1e-17) break;
    }
    return std::clamp(2.0 * s, 0.0, 1.0);
}

KsResult ks_uniform(std::vector<double> u)
{
    KsResult r;
    r.n = static_cast<std::int64_t>(u.size());
    if (u.empty()) return r;
    std::sort(u.begin(), u.end());
    auto n = static_cast<double>(u.size());
    double d = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        double f = std::clamp(u[k], 0.0, 1.0);
        d = std::max({d, (k + 1) / n - f, f - k / n});
    }
    r.statistic = d;
    double sn = std::sqrt(n);
    r.p_value = kolmogorov_tail((sn + 0.12 + 0.11 / sn) * d);
    return r;
}

ChiSquareResult chi_square(const std::vector<double>& observed, const std::vector<double>& expected,
                           int fitted_parameters)
{
    if (observed.size() != expected.size() || observed.size() < 2)
        throw std::invalid_argument("chi_square needs matching bins, at least two");
    ChiSquareResult r;
    for (std::size_t k = 0; k < observed.size(); ++k) {
        if (!(expected[k] > 0.0)) throw std::invalid_argument("expected counts must be positive");
        double d = observed[k] - expected[k];
        r.statistic += d * d / expected[k];
    }
    r.dof = static_cast<double>(observed.size()) - 1.0 - fitted_parameters;
    if (r.dof < 1.0) throw std::invalid_argument("chi_square has no degrees of freedom left");
    boost::math::chi_squared dist(r.dof);
    r.p_value = boost::math::cdf(boost::math::complement(dist, r.statistic));
    return r;
}

namespace {

double log_choose(double a, double b)
{
    return std::lgamma(a + 1.0) - std::lgamma(b + 1.0) - std::lgamma(a - b + 1.0);
}

}  // namespace

KsResult geometric_ks(const std::vector<std::vector<std::int64_t>>& queue_samples, std::uint64_t seed, int min_samples)
{
    Stream rng = Stream::derive(seed, {kOracleStream, 0x6b73});
    std::vector<double> u;
    for (const auto& qs : queue_samples) {
        if (static_cast<int>(qs.size()) < min_samples) continue;
        // Given the sum s of the first j gaps, gap j is the first part of a uniformly random
        // composition of s into j parts: P(X_j > x | s) = C(s - x - 1, j - 1) / C(s - 1, j - 1).
        // The transformed values are i.i.d. uniform whatever the success probability.
        double s = 0.0;
        for (std::size_t k = 0; k < qs.size(); ++k) {
            std::int64_t v = qs[k];
            if (v < 1) throw std::invalid_argument("geometric samples start at 1");
            s += static_cast<double>(v);
            if (k == 0) continue;
            double j = static_cast<double>(k + 1);
            double x = static_cast<double>(v);
            double denom = log_choose(s - 1.0, j - 1.0);
            auto tail = [&](double y) {
                double a = s - y - 1.0;
                return a < j - 1.0 ? 0.0 : std::exp(log_choose(a, j - 1.0) - denom);
            };
            double lo = 1.0 - tail(x - 1.0);
            double hi = 1.0 - tail(x);
            u.push_back(lo + rng.uniform() * (hi - lo));
        }
    }
    return ks_uniform(std::move(u));
}

double mean(const std::vector<double>& v)
{
    if (v.empty()) return 0.0;
    return std::accumulate(v.begin(), v.end(), 0.0) / v.size();
}

double sample_stddev(const std::vector<double>& v)
{
    if (v.size() < 2) return 0.0;
    double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / (v.size() - 1));
}

double t_half_width(const std::vector<double>& v)
{
    if (v.size() < 2) return 0.0;
    boost::math::students_t dist(static_cast<double>(v.size() - 1));
    double q = boost::math::quantile(boost::math::complement(dist, 0.025));
    return q * sample_stddev(v) / std::sqrt(static_cast<double>(v.size()));
}

}  // namespace manet
