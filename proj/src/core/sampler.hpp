#pragma once

// Gibbs samplers with data augmentation for the LSI, SI-1 and SI-2 specifications.
//
// One sweep (LSI, SI-1): impute each unit's principal stratum within its observed pair,
// then draw probit utilities and coefficients for the three nested stratum probits and
// the second-period assignment probit, then the (beta, sigma2) block of every treatment
// sequence. SI-2 has no latent strata: the intermediate-outcome probit, the assignment
// probit and the outcome regressions are all conditioned on observed Y1.

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "model.hpp"
#include "rng.hpp"

namespace seqlsi {

struct PriorConfig {
    double coef_mean = 0.0;
    double coef_var = 100.0;
    double sigma2_df = 1.0;     // scaled-inverse-chi-square degrees of freedom
    double sigma2_scale = 1.0;  // scaled-inverse-chi-square scale s0^2
};
void validate(const PriorConfig& p);

// Starting state for LSI / SI-1. Random: strata uniform over each unit's pair,
// coefficients 0. WarmStart: theta from em_warm_start, strata imputed from it.
enum class InitKind : std::uint8_t { WarmStart = 0, Random = 1 };
std::string_view to_string(InitKind k);
InitKind init_from_string(std::string_view s);  // "warm" | "random"

struct McmcConfig {
    std::size_t burn_in = 1000;
    std::size_t kept = 9000;
    std::size_t thin = 1;
    std::uint64_t seed = 1;
    InitKind init = InitKind::WarmStart;
};
void validate(const McmcConfig& m);

struct ChainMeta {
    PriorConfig priors;
    McmcConfig mcmc;
    std::size_t n_units = 0;
    std::optional<std::uint64_t> data_seed;
    double wall_seconds = 0.0;
};

struct Chain {
    SpecKind spec = SpecKind::LSI;
    std::vector<ParameterVector> draws;
    std::vector<Stratum> aug_strata_final;  // empty for SI-2
    ChainMeta meta;
};

// Distinct design rows plus, per observation, the index of its row. Every design in this
// model is a saturated indicator design, so sufficient statistics are per-pattern counts.
struct IndicatorDesign {
    Eigen::MatrixXd patterns;                // K x p
    std::vector<std::uint8_t> row_pattern;  // one entry per observation, values < K
};

// Draws each latent utility z_i ~ N(x_i'c, 1) truncated to the side fixed by the binary
// response, then c | z from its Normal full conditional. Without observations the draw
// comes from the prior.
Eigen::VectorXd update_probit_block(std::span<const std::uint8_t> responses, const IndicatorDesign& design,
                                    const PriorConfig& prior, const Eigen::VectorXd& current, Engine& rng);

struct OutcomeDraw {
    Eigen::VectorXd beta;
    double sigma2 = 1.0;
};

// beta | sigma2 from the Normal full conditional, then sigma2 | beta from the
// scaled-inverse-chi-square full conditional.
OutcomeDraw update_outcome_block(std::span<const double> y, const IndicatorDesign& design, const PriorConfig& prior,
                                 double current_sigma2, Engine& rng);

// Mixture weight of each admissible stratum for a unit, on the log scale:
// LSI: pi_g * h_g (or 1 - h_g) * f_g; SI-1: pi_g * f_g (the assignment factor is common).
std::array<double, 2> stratum_log_weights(const Unit& unit, const ParameterVector& theta, SpecKind spec);

// Draws the unit's stratum from latent_pair(w1, y1_obs) with the weights above.
// ContractError if both weights vanish or the spec has no strata (SI-2).
Stratum augment_stratum(const Unit& unit, const ParameterVector& theta, SpecKind spec, Engine& rng);

// Throws NumericalError naming the iteration and block if the state turns non-finite.
// A non-null `init` overrides mcmc.init.
Chain run_gibbs(const Dataset& data, SpecKind spec, const PriorConfig& priors, const McmcConfig& mcmc,
               const ParameterVector* init = nullptr);

}  // namespace seqlsi
