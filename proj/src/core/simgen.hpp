#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "model.hpp"

namespace seqlsi {

struct ScenarioConfig {
    ParameterVector theta_true;
    SpecKind spec = SpecKind::LSI;  // LSI or SI1; generation always runs at stratum level
    std::size_t n = 5000;
    double p_w1 = 0.5;
    std::uint64_t seed = 1;
};

void validate(const ScenarioConfig& cfg);

// Simulates n units: stratum from the nested probits, W1 ~ Bernoulli(p_w1), W2 from the
// stratum-level probit, all four Y2 potentials from their Normal models. Unit i draws
// from its own stream derived from (seed, i), so the output does not depend on the order
// in which units are generated.
Dataset generate(const ScenarioConfig& cfg);

// Fills a single unit; exposed so the per-unit stream contract can be tested directly.
Unit generate_unit(const ScenarioConfig& cfg, std::int64_t id);

struct LabeledValue {
    std::string name;
    double value = 0.0;
};

// The six contrasts of ate_contrasts(), evaluated at the stratum level.
std::array<LabeledValue, 6> true_ates(const ParameterVector& theta_true);

// Sets the intercepts of beta_10, beta_01 and beta_11 so that E[Y2(s)] - E[Y2(0,0)]
// equals the given offsets (order: sequences 10, 01, 11). Slopes and beta_00 are kept.
ParameterVector calibrate_intercepts(ParameterVector theta, const std::array<double, 3>& offsets);

}  // namespace seqlsi
