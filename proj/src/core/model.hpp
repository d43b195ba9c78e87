#pragma once

// Probability model for two-period sequential treatments with a binary intermediate
// outcome: nested-probit principal strata, probit second-period assignment and a Normal
// final outcome whose mean depends on the stratum (or on the observed intermediate
// outcome under SI-2). Everything here is a pure function of its inputs.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace seqlsi {

// Principal stratum (Y1(0), Y1(1)); code = 2*Y1(0) + Y1(1).
enum class Stratum : std::uint8_t { S00 = 0, S01 = 1, S10 = 2, S11 = 3 };

inline constexpr std::array<Stratum, 4> kAllStrata{Stratum::S00, Stratum::S01, Stratum::S10, Stratum::S11};

constexpr int index(Stratum g) noexcept { return static_cast<int>(g); }
constexpr int y1_under(Stratum g, int w1) noexcept { return w1 ? (index(g) & 1) : (index(g) >> 1); }
constexpr Stratum make_stratum(int y1_if_control, int y1_if_treated) noexcept {
    return static_cast<Stratum>(2 * y1_if_control + y1_if_treated);
}
std::string_view to_string(Stratum g);

// Treatment sequence (w1, w2); index = 2*w1 + w2.
struct TreatmentSequence {
    int w1 = 0;
    int w2 = 0;

    constexpr int index() const noexcept { return 2 * w1 + w2; }
    static constexpr TreatmentSequence from_index(int i) noexcept { return {i >> 1, i & 1}; }
    friend constexpr bool operator==(TreatmentSequence, TreatmentSequence) = default;
};
std::string to_string(TreatmentSequence s);

enum class SpecKind : std::uint8_t { LSI = 0, SI1 = 1, SI2 = 2 };
std::string_view to_string(SpecKind spec);
SpecKind spec_from_string(std::string_view s);  // "lsi" | "si1" | "si2", case-insensitive

// Coefficient slots of the 4-indicator design (1, Y1(0), Y1(1), Y1(0)Y1(1)).
enum Coef : int { kIntercept = 0, kY10 = 1, kY11 = 2, kY10Y11 = 3 };

// Slot holding the coefficient on the observed intermediate outcome Y1(w1).
constexpr int observed_slope_slot(int w1) noexcept { return w1 ? kY11 : kY10; }

// Design row of a stratum: (1, Y1(0), Y1(1), Y1(0)Y1(1)).
constexpr std::array<double, 4> stratum_design(Stratum g) noexcept {
    const int y0 = index(g) >> 1;
    const int y1 = index(g) & 1;
    return {1.0, double(y0), double(y1), double(y0 * y1)};
}

// theta = (alpha, gamma, beta, sigma2): 31 scalars.
//
// LSI / SI-1: alpha = (alpha^11, alpha^00, alpha^10) nested stratum probit intercepts.
// SI-2 reuses the same storage: alpha[0] = alpha_{w1=0}, alpha[1] = alpha_{w1=1} for the
// probit Pr(Y1(w1) = 1) = Phi(alpha_{w1}), alpha[2] = 0; beta[s] keeps only the
// intercept and the slope in slot observed_slope_slot(w1).
// Under SI-1 / SI-2 the four gammas outside (intercept, observed slope) are zero.
struct ParameterVector {
    static constexpr std::size_t kSize = 31;

    std::array<double, 3> alpha{};
    std::array<std::array<double, 4>, 2> gamma{};  // [w1][coef]
    std::array<std::array<double, 4>, 4> beta{};   // [sequence index][coef]
    std::array<double, 4> sigma2{1.0, 1.0, 1.0, 1.0};

    std::array<double, kSize> flatten() const;
    static ParameterVector unflatten(std::span<const double> v);
    static const std::array<std::string, kSize>& names();

    friend bool operator==(const ParameterVector&, const ParameterVector&) = default;
};

// Throws DomainError on non-finite entries / non-positive variances and ContractError
// when the constraints of the given spec are violated.
void validate(const ParameterVector& theta, SpecKind spec);
bool satisfies_si_constraint(const ParameterVector& theta) noexcept;
// Zeroes the four gammas that SI-1 and SI-2 force to zero.
ParameterVector with_si_constraint(ParameterVector theta) noexcept;
// Flattened slots that the spec leaves free (false for slots pinned at zero).
std::array<bool, ParameterVector::kSize> free_parameters(SpecKind spec) noexcept;

struct LatentTruth {
    Stratum stratum = Stratum::S00;
    std::array<double, 4> y2_potential{};  // by sequence index
};

struct Unit {
    std::int64_t id = 0;
    std::uint8_t w1 = 0;
    std::uint8_t y1_obs = 0;
    std::uint8_t w2 = 0;
    double y2_obs = 0.0;
    std::optional<LatentTruth> latent;

    TreatmentSequence sequence() const noexcept { return {w1, w2}; }
};

struct Dataset {
    std::vector<Unit> units;
    std::optional<std::uint64_t> seed;  // set for simulated data

    std::size_t size() const noexcept { return units.size(); }
    bool has_truth() const noexcept;
};

// Observed cell O(w1, y1, w2), index 4*w1 + 2*y1 + w2.
constexpr int cell_index(int w1, int y1, int w2) noexcept { return 4 * w1 + 2 * y1 + w2; }

using StrataProbs = std::array<double, 4>;  // indexed by Stratum

StrataProbs strata_probs(std::span<const double, 3> alpha);
StrataProbs strata_log_probs(std::span<const double, 3> alpha);

double assign_prob_lsi(const std::array<std::array<double, 4>, 2>& gamma, int w1, Stratum g);
double assign_prob_si(const std::array<std::array<double, 4>, 2>& gamma, int w1, int y1);
double outcome_mean(const std::array<double, 4>& beta_block, Stratum g);

// The two strata compatible with observing y1 under first treatment w1.
std::pair<Stratum, Stratum> latent_pair(int w1, int y1);

// E[Y2(w1, w2)] under the spec.
double mean_potential_outcome(const ParameterVector& theta, TreatmentSequence s, SpecKind spec);
// ATE_{a.b} = E[Y2(a)] - E[Y2(b)].
double ate_from_params(const ParameterVector& theta, TreatmentSequence a, TreatmentSequence b, SpecKind spec);

struct Contrast {
    TreatmentSequence treated;
    TreatmentSequence reference;
    std::string name() const;  // e.g. "ATE_11.00"
};
// (1,1) vs (0,0), (0,1), (1,0); (1,0) vs (0,0); (0,1) vs (1,0); (0,1) vs (0,0).
const std::array<Contrast, 6>& ate_contrasts();

// Observed-data log-likelihood of (W2, Y2 | W1, Y1_obs); p(W1) omitted for every spec.
// Returns -inf for a zero-probability observation; throws NumericalError on NaN.
double log_likelihood(const ParameterVector& theta, const Dataset& data, SpecKind spec);
double unit_log_likelihood(const ParameterVector& theta, const Unit& u, SpecKind spec);

// SI-1 likelihood evaluated after marginalizing the missing intermediate outcome: each
// unit contributes h_{y1}^{w1} * Pr(Y1(w1) = y1) * f_{y1}, with f_{y1} the stratum mixture
// density conditional on Y1(w1) = y1. Algebraically equal to the SI-1 likelihood.
double log_likelihood_si_marginalized(const ParameterVector& theta, const Dataset& data);

}  // namespace seqlsi
