#include "normal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>

namespace seqlsi {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kLogSqrt2Pi = 0.91893853320467274178;
}  // namespace

double norm_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

double norm_sf(double x) { return 0.5 * std::erfc(x * kInvSqrt2); }

double log_norm_cdf(double x) {
    if (std::isnan(x)) return x;
    if (x > 5.0) return std::log1p(-norm_sf(x));
    if (x > -37.0) return std::log(norm_cdf(x));
    // erfc underflows below here; Mills-ratio expansion, truncation error < 1e-11 relative.
    const double x2 = x * x;
    const double inv = 1.0 / x2;
    const double series = 1.0 - inv * (1.0 - 3.0 * inv * (1.0 - 5.0 * inv * (1.0 - 7.0 * inv)));
    return -0.5 * x2 - std::log(-x) - kLogSqrt2Pi + std::log(series);
}

double norm_quantile(double p) {
    if (!(p > 0.0)) return p == 0.0 ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::quiet_NaN();
    if (!(p < 1.0)) return p == 1.0 ? std::numeric_limits<double>::infinity() : std::numeric_limits<double>::quiet_NaN();
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double norm_logpdf(double x, double mean, double var) {
    const double d = x - mean;
    return -0.5 * d * d / var - 0.5 * std::log(var) - kLogSqrt2Pi;
}

double log_sum_exp(double a, double b) {
    const double m = std::max(a, b);
    if (m == -std::numeric_limits<double>::infinity()) return m;
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

double log_sum_exp(std::span<const double> terms) {
    if (terms.empty()) return -std::numeric_limits<double>::infinity();
    const double m = *std::max_element(terms.begin(), terms.end());
    if (m == -std::numeric_limits<double>::infinity()) return m;
    double s = 0.0;
    for (double t : terms) s += std::exp(t - m);
    return m + std::log(s);
}

}  // namespace seqlsi
