#pragma once

// Deterministic starting point for the LSI / SI-1 samplers.
//
// The observed-data likelihood is a two-component mixture inside each of the eight
// observed cells, and it has several local maxima that differ in which component of a
// cell is attached to which stratum. A Gibbs chain started from a random labeling can
// settle in one of them for thousands of sweeps. The search below runs a short EM from
// every orientation of a median split of the eight cells (256 starts), refines the best
// few to convergence and returns the maximizer. EM works on the saturated cell-mean
// parametrization (pi_g, h_g^{w1}, mean_{s,g}, sigma2_s) and maps back to theta.

#include <cstddef>

#include "model.hpp"

namespace seqlsi {

struct WarmStartConfig {
    std::size_t screen_iterations = 30;
    std::size_t refine_candidates = 8;
    std::size_t max_iterations = 3000;
    double tolerance = 1e-8;  // stop when the log-likelihood gain per iteration falls below this
};

struct WarmStartResult {
    ParameterVector theta;
    double log_likelihood = 0.0;
    std::size_t starts = 0;
};

// ContractError for SI-2 (no latent strata) or an empty dataset.
WarmStartResult em_warm_start(const Dataset& data, SpecKind spec, const WarmStartConfig& cfg = {});

}  // namespace seqlsi
