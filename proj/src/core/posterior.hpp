#pragma once

// Posterior post-processing: functionals of theta evaluated draw by draw, summary rows,
// kernel density grids for plotting, and convergence diagnostics.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "model.hpp"
#include "sampler.hpp"

namespace seqlsi {

enum class FunctionalKind : std::uint8_t { Ate, StratumProb, AssignProb };

struct Functional {
    FunctionalKind kind = FunctionalKind::Ate;
    std::size_t contrast = 0;     // Ate: index into ate_contrasts()
    Stratum stratum = Stratum::S00;  // StratumProb, AssignProb
    int w1 = 0;                   // AssignProb

    static Functional ate(std::size_t k);
    static Functional stratum_prob(Stratum g);
    static Functional assign_prob(int w1, Stratum g);

    std::string name() const;  // "ATE_11.00", "pi_01", "h1_01"
};

// Stratum-level functionals (pi_g, h^{w1}_g) do not exist under SI-2.
bool available(const Functional& f, SpecKind spec) noexcept;

// ContractError when the functional is unavailable for chain.spec.
std::vector<double> functional_draws(const Chain& chain, const Functional& f);

struct SummaryRow {
    std::string name;
    double mean = 0.0;
    double sd = 0.0;
    double q025 = 0.0;
    double q975 = 0.0;
    std::optional<double> q25;
    std::optional<double> median;
    std::optional<double> q75;
};

// Linear interpolation between order statistics (R type 7). `sorted` must be ascending.
double quantile_sorted(std::span<const double> sorted, double p);

// Needs at least 2 draws; ContractError otherwise, DomainError on non-finite draws.
SummaryRow summarize(std::string name, std::span<const double> draws, bool quartiles = false);

struct DensityGrid {
    bool point_mass = false;
    double location = 0.0;  // value of the point mass
    double bandwidth = 0.0;
    std::vector<double> x;
    std::vector<double> density;
};

// Gaussian kernel estimate with Silverman's rule-of-thumb bandwidth, evaluated on an
// equally spaced grid over [min - 4h, max + 4h]. Needs >= 30 draws and >= 2 grid points.
DensityGrid density_grid(std::span<const double> draws, std::size_t n_points = 512);

// Effective sample size with Geyer's initial monotone sequence estimator.
double effective_sample_size(std::span<const double> draws);

// Potential scale reduction across chains of equal length (>= 2 chains, >= 4 draws).
// `rhat` uses var+ = W + B/n, so identical chains give exactly 1; `split_rhat` halves
// every chain first and uses var+ = (n-1)/n W + B/n.
double rhat(std::span<const std::span<const double>> chains);
double split_rhat(std::span<const std::span<const double>> chains);

struct DiagnosticRow {
    std::string name;
    double mean = 0.0;
    double sd = 0.0;
    double ess = 0.0;  // summed over chains
    std::optional<double> rhat;
    std::optional<double> split_rhat;
    double first_half_mean = 0.0;  // pooled trace summaries
    double second_half_mean = 0.0;
};

// One row per parameter and per ATE. R-hat columns need >= 2 chains of the same spec and
// length; ContractError on mixed specs or lengths.
std::vector<DiagnosticRow> diagnostics(std::span<const Chain* const> chains);

}  // namespace seqlsi
