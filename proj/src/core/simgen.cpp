#include "simgen.hpp"

#include <cmath>
#include <random>

#include "error.hpp"
#include "rng.hpp"

namespace seqlsi {

void validate(const ScenarioConfig& cfg) {
    if (cfg.n == 0) throw ContractError("scenario needs n > 0");
    if (!(cfg.p_w1 > 0.0 && cfg.p_w1 < 1.0)) throw ContractError("p_w1 must lie in (0, 1)");
    if (cfg.spec == SpecKind::SI2) throw ContractError("the generator works at stratum level: spec must be lsi or si1");
    validate(cfg.theta_true, cfg.spec);
}

Unit generate_unit(const ScenarioConfig& cfg, std::int64_t id) {
    const ParameterVector& t = cfg.theta_true;
    SplitMix64 gen(derive_seed(cfg.seed, static_cast<std::uint64_t>(id)));
    std::normal_distribution<double> normal;

    Stratum g;
    if (t.alpha[0] + normal(gen) <= 0.0)
        g = Stratum::S11;
    else if (t.alpha[1] + normal(gen) <= 0.0)
        g = Stratum::S00;
    else if (t.alpha[2] + normal(gen) <= 0.0)
        g = Stratum::S10;
    else
        g = Stratum::S01;

    Unit u;
    u.id = id;
    u.w1 = uniform_open(gen) < cfg.p_w1 ? 1 : 0;
    u.y1_obs = static_cast<std::uint8_t>(y1_under(g, u.w1));
    const auto x = stratum_design(g);
    const auto& c = t.gamma[u.w1];
    const double w2_index = c[0] * x[0] + c[1] * x[1] + c[2] * x[2] + c[3] * x[3];
    u.w2 = w2_index + normal(gen) > 0.0 ? 1 : 0;

    LatentTruth truth;
    truth.stratum = g;
    for (int s = 0; s < 4; ++s)
        truth.y2_potential[s] = outcome_mean(t.beta[s], g) + std::sqrt(t.sigma2[s]) * normal(gen);
    u.y2_obs = truth.y2_potential[u.sequence().index()];
    u.latent = truth;
    return u;
}

Dataset generate(const ScenarioConfig& cfg) {
    validate(cfg);
    Dataset d;
    d.seed = cfg.seed;
    d.units.reserve(cfg.n);
    for (std::size_t i = 0; i < cfg.n; ++i) d.units.push_back(generate_unit(cfg, static_cast<std::int64_t>(i + 1)));
    return d;
}

std::array<LabeledValue, 6> true_ates(const ParameterVector& theta_true) {
    std::array<LabeledValue, 6> out;
    const auto& contrasts = ate_contrasts();
    for (std::size_t k = 0; k < contrasts.size(); ++k)
        out[k] = {contrasts[k].name(),
                  ate_from_params(theta_true, contrasts[k].treated, contrasts[k].reference, SpecKind::LSI)};
    return out;
}

ParameterVector calibrate_intercepts(ParameterVector theta, const std::array<double, 3>& offsets) {
    validate(theta, SpecKind::LSI);
    const double base = mean_potential_outcome(theta, {0, 0}, SpecKind::LSI);
    const std::array<TreatmentSequence, 3> targets{{{1, 0}, {0, 1}, {1, 1}}};
    for (std::size_t k = 0; k < targets.size(); ++k) {
        auto& b = theta.beta[targets[k].index()];
        // E[Y2(s)] is affine in the intercept with unit slope.
        const double current = mean_potential_outcome(theta, targets[k], SpecKind::LSI);
        b[kIntercept] += base + offsets[k] - current;
    }
    return theta;
}

}  // namespace seqlsi
