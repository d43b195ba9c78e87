#pragma once

#include <span>

namespace seqlsi {

// Standard normal helpers. Phi is evaluated through erfc, so the lower tail keeps full
// relative precision; upper-tail callers should use norm_sf rather than 1 - norm_cdf.
double norm_cdf(double x);
double norm_sf(double x);
double log_norm_cdf(double x);
double norm_quantile(double p);
double norm_logpdf(double x, double mean, double var);

double log_sum_exp(double a, double b);
double log_sum_exp(std::span<const double> terms);

}  // namespace seqlsi
