#pragma once

#include "rng.hpp"

namespace seqlsi {

// Standard normal restricted to (a, b); bounds may be infinite.
// Inverse-CDF on the side of zero where Phi keeps full precision, switching to
// exponential (or uniform, for narrow intervals) rejection once the interval lies
// entirely beyond |z| > 6. Constants are computed once, so repeated draws from the same
// interval are cheap.
class TruncatedStdNormal {
public:
    TruncatedStdNormal(double a, double b);

    double operator()(Engine& rng) const;

private:
    enum class Mode { Straddle, InverseTail, UniformRejection, ExponentialRejection };

    double draw_positive(Engine& rng) const;

    double lo_;  // after reflection to the non-negative side when sign_ < 0
    double hi_;
    double sign_ = 1.0;
    Mode mode_ = Mode::Straddle;
    double c0_ = 0.0;  // Straddle: Phi(a); InverseTail: sf(hi); ExponentialRejection: rate
    double c1_ = 0.0;  // Straddle / InverseTail: width of the probability interval
};

double truncated_std_normal_draw(double a, double b, Engine& rng);

// Draw from N(mean, sd^2) restricted to (lower, upper).
double truncated_normal_draw(double mean, double sd, double lower, double upper, Engine& rng);

}  // namespace seqlsi
