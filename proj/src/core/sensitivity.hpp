#pragma once

// Checks on sequential ignorability. Under SI the second-period assignment probability is
// equal across the two strata that share an observed cell; the gaps below measure how far
// an LSI posterior departs from that. The IPW estimator is a frequentist cross-check that
// is consistent when SI holds.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "model.hpp"
#include "posterior.hpp"
#include "sampler.hpp"

namespace seqlsi {

struct Pairing {
    int id = 0;  // 1..4
    int w1 = 0;
    Stratum first{};
    Stratum second{};

    std::string label() const;  // "w1=0:00-01"
};

// (w1=0) 00 vs 01, (w1=0) 10 vs 11, (w1=1) 00 vs 10, (w1=1) 01 vs 11.
const std::array<Pairing, 4>& equality_pairings();

// Draw-wise h^{w1}_{first} - h^{w1}_{second}; ContractError unless chain.spec is LSI.
std::array<std::vector<double>, 4> equality_gaps(const Chain& chain);

struct SensitivityRow {
    Pairing pairing;
    SummaryRow first;   // assignment probability, quartiles included
    SummaryRow second;
    SummaryRow gap;
    double level = 0.95;
    double lower = 0.0;  // equal-tailed interval of the gap at `level`
    double upper = 0.0;
    bool excludes_zero = false;
};

// level in (0, 1); needs >= 2 draws.
std::vector<SensitivityRow> sensitivity_report(const Chain& chain, double level = 0.95);

struct IpwConfig {
    std::size_t bootstrap_reps = 500;
    std::uint64_t seed = 1;
};

struct IpwEstimate {
    std::string name;
    std::optional<double> estimate;
    std::optional<double> se;     // bootstrap sd; needs >= 2 usable replicates
    std::size_t reps_used = 0;    // replicates where the contrast was defined
    std::string note;             // why the estimate is missing, if it is
};

struct IpwResult {
    std::array<std::optional<double>, 4> sequence_means;  // by sequence index
    std::array<IpwEstimate, 6> ates;
    std::vector<int> empty_cells;  // cell_index values with no units
};

// Hajek-weighted means per treatment sequence with weights
// 1 / (p(W1) p(W2 | W1, Y1_obs)) from empirical cell frequencies. A sequence mean is
// undefined when one of its two observed cells is empty; contrasts using it are reported
// as undefined. ContractError on an empty dataset.
IpwResult ipw_msm_estimate(const Dataset& data, const IpwConfig& cfg = {});

}  // namespace seqlsi
