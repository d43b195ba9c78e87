#include "truncnorm.hpp"

#include <cmath>

#include "error.hpp"
#include "normal.hpp"

namespace seqlsi {

namespace {
constexpr double kTailSwitch = 6.0;
}

TruncatedStdNormal::TruncatedStdNormal(double a, double b) {
    if (std::isnan(a) || std::isnan(b)) throw DomainError("truncation bounds must not be NaN");
    if (!(a < b)) throw ContractError("truncated normal needs lower < upper (zero-width interval)");
    if (a < 0.0 && b > 0.0) {
        lo_ = a;
        hi_ = b;
        mode_ = Mode::Straddle;
        c0_ = norm_cdf(a);
        c1_ = norm_cdf(b) - c0_;
        return;
    }
    if (b <= 0.0) {
        sign_ = -1.0;
        lo_ = -b;
        hi_ = -a;
    } else {
        lo_ = a;
        hi_ = b;
    }
    if (lo_ > kTailSwitch) {
        if ((hi_ - lo_) * lo_ < 1.0) {
            mode_ = Mode::UniformRejection;
        } else {
            mode_ = Mode::ExponentialRejection;
            c0_ = 0.5 * (lo_ + std::sqrt(lo_ * lo_ + 4.0));
        }
        return;
    }
    mode_ = Mode::InverseTail;
    c0_ = norm_sf(hi_);
    c1_ = norm_sf(lo_) - c0_;
}

double TruncatedStdNormal::draw_positive(Engine& rng) const {
    switch (mode_) {
        case Mode::InverseTail:
            for (int attempt = 0; attempt < 64; ++attempt) {
                const double z = -norm_quantile(c0_ + c1_ * uniform_open(rng));
                if (z > lo_ && z < hi_) return z;
            }
            // Interval narrower than the quantile resolution.
            return lo_ + 0.5 * (hi_ - lo_);
        case Mode::UniformRejection:
            for (;;) {
                const double z = lo_ + (hi_ - lo_) * uniform_open(rng);
                if (std::log(uniform_open(rng)) <= 0.5 * (lo_ - z) * (lo_ + z)) return z;
            }
        case Mode::ExponentialRejection:
            for (;;) {
                const double z = lo_ - std::log(uniform_open(rng)) / c0_;
                if (z >= hi_) continue;
                const double d = z - c0_;
                if (std::log(uniform_open(rng)) <= -0.5 * d * d) return z;
            }
        case Mode::Straddle:
            break;
    }
    return 0.0;
}

double TruncatedStdNormal::operator()(Engine& rng) const {
    if (mode_ == Mode::Straddle) {
        for (;;) {
            const double z = norm_quantile(c0_ + c1_ * uniform_open(rng));
            if (z > lo_ && z < hi_) return z;
        }
    }
    return sign_ * draw_positive(rng);
}

double truncated_std_normal_draw(double a, double b, Engine& rng) { return TruncatedStdNormal(a, b)(rng); }

double truncated_normal_draw(double mean, double sd, double lower, double upper, Engine& rng) {
    if (!std::isfinite(mean) || !std::isfinite(sd)) throw DomainError("truncated normal mean/sd must be finite");
    if (!(sd > 0.0)) throw ContractError("truncated normal needs sd > 0");
    if (!(lower < upper)) throw ContractError("truncated normal needs lower < upper (zero-width interval)");
    const double z = truncated_std_normal_draw((lower - mean) / sd, (upper - mean) / sd, rng);
    double x = mean + sd * z;
    // Keep the open interval after rounding in the affine map.
    if (!(x > lower)) x = std::nextafter(lower, upper);
    if (!(x < upper)) x = std::nextafter(upper, lower);
    return x;
}

}  // namespace seqlsi
