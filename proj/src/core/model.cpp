#include "model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include "error.hpp"
#include "normal.hpp"

namespace seqlsi {

std::string_view to_string(Stratum g) {
    static constexpr std::array<std::string_view, 4> names{"00", "01", "10", "11"};
    return names[index(g)];
}

std::string to_string(TreatmentSequence s) { return std::to_string(s.w1) + std::to_string(s.w2); }

std::string_view to_string(SpecKind spec) {
    switch (spec) {
        case SpecKind::LSI: return "lsi";
        case SpecKind::SI1: return "si1";
        case SpecKind::SI2: return "si2";
    }
    return "?";
}

SpecKind spec_from_string(std::string_view s) {
    std::string lower(s);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    std::erase(lower, '-');
    if (lower == "lsi") return SpecKind::LSI;
    if (lower == "si1") return SpecKind::SI1;
    if (lower == "si2") return SpecKind::SI2;
    throw ContractError("unknown spec '" + std::string(s) + "' (expected lsi, si1 or si2)");
}

// ---------------------------------------------------------------------------------------

std::array<double, ParameterVector::kSize> ParameterVector::flatten() const {
    std::array<double, kSize> v{};
    auto it = v.begin();
    it = std::copy(alpha.begin(), alpha.end(), it);
    for (const auto& g : gamma) it = std::copy(g.begin(), g.end(), it);
    for (const auto& b : beta) it = std::copy(b.begin(), b.end(), it);
    std::copy(sigma2.begin(), sigma2.end(), it);
    return v;
}

ParameterVector ParameterVector::unflatten(std::span<const double> v) {
    if (v.size() != kSize) throw ContractError("parameter vector needs 31 values, got " + std::to_string(v.size()));
    ParameterVector p;
    auto it = v.begin();
    std::copy_n(it, 3, p.alpha.begin());
    it += 3;
    for (auto& g : p.gamma) {
        std::copy_n(it, 4, g.begin());
        it += 4;
    }
    for (auto& b : p.beta) {
        std::copy_n(it, 4, b.begin());
        it += 4;
    }
    std::copy_n(it, 4, p.sigma2.begin());
    return p;
}

const std::array<std::string, ParameterVector::kSize>& ParameterVector::names() {
    static const auto table = [] {
        std::array<std::string, kSize> n;
        static constexpr std::array<const char*, 4> coef{"int", "y10", "y11", "y10y11"};
        std::size_t k = 0;
        n[k++] = "alpha_11";
        n[k++] = "alpha_00";
        n[k++] = "alpha_10";
        for (int w1 = 0; w1 < 2; ++w1)
            for (const char* c : coef) n[k++] = "gamma" + std::to_string(w1) + "_" + c;
        for (int s = 0; s < 4; ++s)
            for (const char* c : coef) n[k++] = "beta" + to_string(TreatmentSequence::from_index(s)) + "_" + c;
        for (int s = 0; s < 4; ++s) n[k++] = "sigma2_" + to_string(TreatmentSequence::from_index(s));
        return n;
    }();
    return table;
}

bool satisfies_si_constraint(const ParameterVector& t) noexcept {
    return t.gamma[1][kY10] == 0.0 && t.gamma[0][kY11] == 0.0 && t.gamma[0][kY10Y11] == 0.0 &&
           t.gamma[1][kY10Y11] == 0.0;
}

ParameterVector with_si_constraint(ParameterVector t) noexcept {
    t.gamma[1][kY10] = 0.0;
    t.gamma[0][kY11] = 0.0;
    t.gamma[0][kY10Y11] = 0.0;
    t.gamma[1][kY10Y11] = 0.0;
    return t;
}

std::array<bool, ParameterVector::kSize> free_parameters(SpecKind spec) noexcept {
    ParameterVector probe;
    probe.alpha.fill(1.0);
    for (auto& g : probe.gamma) g.fill(1.0);
    for (auto& b : probe.beta) b.fill(1.0);
    if (spec != SpecKind::LSI) probe = with_si_constraint(probe);
    if (spec == SpecKind::SI2) {
        probe.alpha[2] = 0.0;
        for (int s = 0; s < 4; ++s)
            for (int c = 1; c < 4; ++c)
                if (c != observed_slope_slot(TreatmentSequence::from_index(s).w1)) probe.beta[s][c] = 0.0;
    }
    const auto flat = probe.flatten();
    std::array<bool, ParameterVector::kSize> out{};
    for (std::size_t i = 0; i < flat.size(); ++i) out[i] = flat[i] != 0.0;
    return out;
}

void validate(const ParameterVector& theta, SpecKind spec) {
    const auto flat = theta.flatten();
    for (std::size_t i = 0; i < flat.size(); ++i)
        if (!std::isfinite(flat[i])) throw DomainError("parameter " + ParameterVector::names()[i] + " is not finite");
    for (int s = 0; s < 4; ++s)
        if (!(theta.sigma2[s] > 0.0)) throw DomainError("sigma2 must be strictly positive");
    if (spec == SpecKind::LSI) return;
    if (!satisfies_si_constraint(theta))
        throw ContractError(std::string("spec ") + std::string(to_string(spec)) +
                            " requires gamma1_y10 = gamma0_y11 = gamma0_y10y11 = gamma1_y10y11 = 0");
    if (spec == SpecKind::SI2) {
        if (theta.alpha[2] != 0.0) throw ContractError("spec si2 uses alpha_11/alpha_00 slots only; alpha_10 must be 0");
        for (int s = 0; s < 4; ++s) {
            const int w1 = TreatmentSequence::from_index(s).w1;
            for (int c = 1; c < 4; ++c)
                if (c != observed_slope_slot(w1) && theta.beta[s][c] != 0.0)
                    throw ContractError("spec si2 allows only the observed-outcome slope in beta" +
                                        to_string(TreatmentSequence::from_index(s)));
        }
    }
}

bool Dataset::has_truth() const noexcept {
    return !units.empty() && std::all_of(units.begin(), units.end(), [](const Unit& u) { return u.latent.has_value(); });
}

// ---------------------------------------------------------------------------------------

namespace {

void require_finite(std::span<const double> v, const char* what) {
    for (double x : v)
        if (!std::isfinite(x)) throw DomainError(std::string(what) + " must be finite");
}

double lsi_index(const std::array<std::array<double, 4>, 2>& gamma, int w1, Stratum g) {
    const auto x = stratum_design(g);
    const auto& c = gamma[w1];
    return c[0] * x[0] + c[1] * x[1] + c[2] * x[2] + c[3] * x[3];
}

double si_index(const std::array<std::array<double, 4>, 2>& gamma, int w1, int y1) {
    return gamma[w1][kIntercept] + gamma[w1][observed_slope_slot(w1)] * y1;
}

double log_assign(double index, int w2) { return w2 ? log_norm_cdf(index) : log_norm_cdf(-index); }

}  // namespace

StrataProbs strata_probs(std::span<const double, 3> alpha) {
    require_finite(alpha, "alpha");
    const double p11 = norm_cdf(alpha[0]);
    const double p00 = norm_cdf(alpha[1]);
    const double p10 = norm_cdf(alpha[2]);
    StrataProbs pi{};
    pi[index(Stratum::S11)] = norm_sf(alpha[0]);
    pi[index(Stratum::S00)] = p11 * norm_sf(alpha[1]);
    pi[index(Stratum::S10)] = p11 * p00 * norm_sf(alpha[2]);
    pi[index(Stratum::S01)] = p11 * p00 * p10;
    return pi;
}

StrataProbs strata_log_probs(std::span<const double, 3> alpha) {
    require_finite(alpha, "alpha");
    const double l11 = log_norm_cdf(alpha[0]);
    const double l00 = log_norm_cdf(alpha[1]);
    StrataProbs lp{};
    lp[index(Stratum::S11)] = log_norm_cdf(-alpha[0]);
    lp[index(Stratum::S00)] = l11 + log_norm_cdf(-alpha[1]);
    lp[index(Stratum::S10)] = l11 + l00 + log_norm_cdf(-alpha[2]);
    lp[index(Stratum::S01)] = l11 + l00 + log_norm_cdf(alpha[2]);
    return lp;
}

double assign_prob_lsi(const std::array<std::array<double, 4>, 2>& gamma, int w1, Stratum g) {
    require_finite(gamma[w1], "gamma");
    return norm_cdf(lsi_index(gamma, w1, g));
}

double assign_prob_si(const std::array<std::array<double, 4>, 2>& gamma, int w1, int y1) {
    require_finite(gamma[w1], "gamma");
    return norm_cdf(si_index(gamma, w1, y1));
}

double outcome_mean(const std::array<double, 4>& b, Stratum g) {
    const auto x = stratum_design(g);
    return b[0] * x[0] + b[1] * x[1] + b[2] * x[2] + b[3] * x[3];
}

std::pair<Stratum, Stratum> latent_pair(int w1, int y1) {
    // The observed component fixes one coordinate of (Y1(0), Y1(1)); the other is free.
    if (w1 == 0) return {make_stratum(y1, 0), make_stratum(y1, 1)};
    return {make_stratum(0, y1), make_stratum(1, y1)};
}

double mean_potential_outcome(const ParameterVector& theta, TreatmentSequence s, SpecKind spec) {
    const auto& b = theta.beta[s.index()];
    if (spec == SpecKind::SI2) {
        const double p1 = norm_cdf(theta.alpha[s.w1]);
        return b[kIntercept] + p1 * b[observed_slope_slot(s.w1)];
    }
    const auto pi = strata_probs(theta.alpha);
    double m = 0.0;
    for (Stratum g : kAllStrata) m += pi[index(g)] * outcome_mean(b, g);
    return m;
}

double ate_from_params(const ParameterVector& theta, TreatmentSequence a, TreatmentSequence b, SpecKind spec) {
    validate(theta, spec);
    return mean_potential_outcome(theta, a, spec) - mean_potential_outcome(theta, b, spec);
}

std::string Contrast::name() const { return "ATE_" + to_string(treated) + "." + to_string(reference); }

const std::array<Contrast, 6>& ate_contrasts() {
    static const std::array<Contrast, 6> c{{
        {{1, 1}, {0, 0}},
        {{1, 1}, {0, 1}},
        {{1, 1}, {1, 0}},
        {{1, 0}, {0, 0}},
        {{0, 1}, {1, 0}},
        {{0, 1}, {0, 0}},
    }};
    return c;
}

// ---------------------------------------------------------------------------------------

namespace {

double unit_ll_unchecked(const ParameterVector& theta, const StrataProbs& log_pi, const Unit& u, SpecKind spec) {
    const int s = u.sequence().index();
    const double var = theta.sigma2[s];
    if (spec == SpecKind::SI2) {
        const double a = theta.alpha[u.w1];
        const double lpy = u.y1_obs ? log_norm_cdf(a) : log_norm_cdf(-a);
        const auto& b = theta.beta[s];
        const double mean = b[kIntercept] + b[observed_slope_slot(u.w1)] * u.y1_obs;
        return log_assign(si_index(theta.gamma, u.w1, u.y1_obs), u.w2) + lpy + norm_logpdf(u.y2_obs, mean, var);
    }
    const auto [ga, gb] = latent_pair(u.w1, u.y1_obs);
    std::array<double, 2> terms{};
    int k = 0;
    for (Stratum g : {ga, gb}) {
        const double idx =
            spec == SpecKind::LSI ? lsi_index(theta.gamma, u.w1, g) : si_index(theta.gamma, u.w1, u.y1_obs);
        terms[k++] = log_pi[index(g)] + log_assign(idx, u.w2) + norm_logpdf(u.y2_obs, outcome_mean(theta.beta[s], g), var);
    }
    return log_sum_exp(terms[0], terms[1]);
}

StrataProbs log_pi_for(const ParameterVector& theta, SpecKind spec) {
    return spec == SpecKind::SI2 ? StrataProbs{} : strata_log_probs(theta.alpha);
}

double checked(double v) {
    if (std::isnan(v)) throw NumericalError("log-likelihood evaluated to NaN");
    return v;
}

}  // namespace

double unit_log_likelihood(const ParameterVector& theta, const Unit& u, SpecKind spec) {
    validate(theta, spec);
    return checked(unit_ll_unchecked(theta, log_pi_for(theta, spec), u, spec));
}

double log_likelihood(const ParameterVector& theta, const Dataset& data, SpecKind spec) {
    validate(theta, spec);
    const auto log_pi = log_pi_for(theta, spec);
    double total = 0.0;
    for (const Unit& u : data.units) total += unit_ll_unchecked(theta, log_pi, u, spec);
    return checked(total);
}

double log_likelihood_si_marginalized(const ParameterVector& theta, const Dataset& data) {
    validate(theta, SpecKind::SI1);
    const auto pi = strata_probs(theta.alpha);
    const auto log_pi = strata_log_probs(theta.alpha);
    double total = 0.0;
    for (const Unit& u : data.units) {
        const int s = u.sequence().index();
        const auto [ga, gb] = latent_pair(u.w1, u.y1_obs);
        // Pr(Y1(w1) = y1) as the sum over the compatible strata, then the conditional
        // mixture density of Y2 given Y1(w1) = y1.
        const double log_py = std::log(pi[index(ga)] + pi[index(gb)]);
        const double fa = log_pi[index(ga)] - log_py + norm_logpdf(u.y2_obs, outcome_mean(theta.beta[s], ga), theta.sigma2[s]);
        const double fb = log_pi[index(gb)] - log_py + norm_logpdf(u.y2_obs, outcome_mean(theta.beta[s], gb), theta.sigma2[s]);
        total += log_assign(si_index(theta.gamma, u.w1, u.y1_obs), u.w2) + log_py + log_sum_exp(fa, fb);
    }
    return checked(total);
}

}  // namespace seqlsi
