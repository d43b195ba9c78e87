#include "posterior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "error.hpp"

namespace seqlsi {

Functional Functional::ate(std::size_t k) {
    if (k >= ate_contrasts().size()) throw ContractError("contrast index out of range");
    Functional f;
    f.kind = FunctionalKind::Ate;
    f.contrast = k;
    return f;
}

Functional Functional::stratum_prob(Stratum g) {
    Functional f;
    f.kind = FunctionalKind::StratumProb;
    f.stratum = g;
    return f;
}

Functional Functional::assign_prob(int w1, Stratum g) {
    if (w1 != 0 && w1 != 1) throw ContractError("w1 must be 0 or 1");
    Functional f;
    f.kind = FunctionalKind::AssignProb;
    f.w1 = w1;
    f.stratum = g;
    return f;
}

std::string Functional::name() const {
    switch (kind) {
        case FunctionalKind::Ate: return ate_contrasts()[contrast].name();
        case FunctionalKind::StratumProb: return "pi_" + std::string(to_string(stratum));
        case FunctionalKind::AssignProb: return "h" + std::to_string(w1) + "_" + std::string(to_string(stratum));
    }
    return "?";
}

bool available(const Functional& f, SpecKind spec) noexcept {
    return f.kind == FunctionalKind::Ate || spec != SpecKind::SI2;
}

std::vector<double> functional_draws(const Chain& chain, const Functional& f) {
    if (!available(f, chain.spec))
        throw ContractError(f.name() + " is not defined under spec si2 (no principal strata; reported as '-')");
    std::vector<double> out;
    out.reserve(chain.draws.size());
    for (const ParameterVector& t : chain.draws) {
        switch (f.kind) {
            case FunctionalKind::Ate: {
                const Contrast& c = ate_contrasts()[f.contrast];
                out.push_back(ate_from_params(t, c.treated, c.reference, chain.spec));
                break;
            }
            case FunctionalKind::StratumProb: out.push_back(strata_probs(t.alpha)[index(f.stratum)]); break;
            case FunctionalKind::AssignProb:
                out.push_back(chain.spec == SpecKind::LSI ? assign_prob_lsi(t.gamma, f.w1, f.stratum)
                                                          : assign_prob_si(t.gamma, f.w1, y1_under(f.stratum, f.w1)));
                break;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------------------

double quantile_sorted(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw ContractError("quantile of an empty sample");
    if (!(p >= 0.0 && p <= 1.0)) throw ContractError("quantile level must lie in [0, 1]");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = h - static_cast<double>(lo);
    if (frac == 0.0 || sorted[lo] == sorted[hi]) return sorted[lo];
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

namespace {

void require_finite_draws(std::span<const double> draws) {
    for (double x : draws)
        if (!std::isfinite(x)) throw DomainError("draws contain a non-finite value");
}

struct Moments {
    double mean = 0.0;
    double var = 0.0;  // divisor n - 1
};

Moments moments(std::span<const double> x) {
    Moments m;
    if (x.empty()) return m;
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    if (*lo == *hi) {
        m.mean = *lo;
        return m;
    }
    double sum = 0.0;
    for (double v : x) sum += v;
    m.mean = std::clamp(sum / static_cast<double>(x.size()), *lo, *hi);
    double ss = 0.0;
    for (double v : x) ss += (v - m.mean) * (v - m.mean);
    m.var = x.size() > 1 ? ss / static_cast<double>(x.size() - 1) : 0.0;
    return m;
}

}  // namespace

SummaryRow summarize(std::string name, std::span<const double> draws, bool quartiles) {
    if (draws.size() < 2) throw ContractError("summarize needs at least 2 draws, got " + std::to_string(draws.size()));
    require_finite_draws(draws);
    std::vector<double> sorted(draws.begin(), draws.end());
    std::sort(sorted.begin(), sorted.end());
    const Moments m = moments(draws);
    SummaryRow row;
    row.name = std::move(name);
    row.mean = m.mean;
    row.sd = std::sqrt(m.var);
    row.q025 = quantile_sorted(sorted, 0.025);
    row.q975 = quantile_sorted(sorted, 0.975);
    if (quartiles) {
        row.q25 = quantile_sorted(sorted, 0.25);
        row.median = quantile_sorted(sorted, 0.5);
        row.q75 = quantile_sorted(sorted, 0.75);
    }
    return row;
}

DensityGrid density_grid(std::span<const double> draws, std::size_t n_points) {
    if (draws.size() < 30) throw ContractError("density grid needs at least 30 draws");
    if (n_points < 2) throw ContractError("density grid needs at least 2 points");
    require_finite_draws(draws);
    std::vector<double> sorted(draws.begin(), draws.end());
    std::sort(sorted.begin(), sorted.end());
    DensityGrid grid;
    if (sorted.front() == sorted.back()) {
        grid.point_mass = true;
        grid.location = sorted.front();
        return grid;
    }
    const double sd = std::sqrt(moments(draws).var);
    const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
    const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
    const double n = static_cast<double>(sorted.size());
    const double h = 0.9 * spread * std::pow(n, -0.2);
    grid.bandwidth = h;

    const double lo = sorted.front() - 4.0 * h;
    const double step = (sorted.back() + 4.0 * h - lo) / static_cast<double>(n_points - 1);
    const double norm = 1.0 / (n * h * std::sqrt(2.0 * std::numbers::pi));
    grid.x.resize(n_points);
    grid.density.resize(n_points);
    // Kernels further than 9 bandwidths away contribute < 1e-17 relative mass.
    const double reach = 9.0 * h;
    for (std::size_t i = 0; i < n_points; ++i) {
        const double x = lo + static_cast<double>(i) * step;
        const auto first = std::lower_bound(sorted.begin(), sorted.end(), x - reach);
        const auto last = std::upper_bound(first, sorted.end(), x + reach);
        double acc = 0.0;
        for (auto it = first; it != last; ++it) {
            const double z = (x - *it) / h;
            acc += std::exp(-0.5 * z * z);
        }
        grid.x[i] = x;
        grid.density[i] = acc * norm;
    }
    return grid;
}

double effective_sample_size(std::span<const double> draws) {
    const std::size_t n = draws.size();
    if (n < 4) throw ContractError("effective sample size needs at least 4 draws");
    require_finite_draws(draws);
    const Moments m = moments(draws);
    if (m.var == 0.0) return static_cast<double>(n);

    auto autocov = [&](std::size_t lag) {
        double acc = 0.0;
        for (std::size_t t = 0; t + lag < n; ++t) acc += (draws[t] - m.mean) * (draws[t + lag] - m.mean);
        return acc / static_cast<double>(n);
    };
    const double gamma0 = autocov(0);
    double tau = -1.0;
    double prev_pair = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k + 1 < n; k += 2) {
        double pair = (autocov(k) + autocov(k + 1)) / gamma0;
        if (pair < 0.0) break;
        pair = std::min(pair, prev_pair);  // initial monotone sequence
        tau += 2.0 * pair;
        prev_pair = pair;
    }
    tau = std::max(tau, 1.0 / std::log10(static_cast<double>(n)));
    return static_cast<double>(n) / tau;
}

namespace {

double potential_scale_reduction(std::span<const std::span<const double>> chains, bool finite_n_correction) {
    const std::size_t m = chains.size();
    const std::size_t n = chains[0].size();
    std::vector<double> means(m);
    double w = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        const Moments mo = moments(chains[j]);
        means[j] = mo.mean;
        w += mo.var;
    }
    w /= static_cast<double>(m);
    // Sample variance of the chain means in pairwise form: exactly 0 for identical means.
    double b_over_n = 0.0;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j) b_over_n += (means[i] - means[j]) * (means[i] - means[j]);
    b_over_n /= static_cast<double>(m * (m - 1));
    if (w == 0.0) return b_over_n == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
    const double nn = static_cast<double>(n);
    const double var_plus = (finite_n_correction ? (nn - 1.0) / nn * w : w) + b_over_n;
    return std::sqrt(var_plus / w);
}

void check_chains(std::span<const std::span<const double>> chains, std::size_t min_len) {
    if (chains.size() < 2) throw ContractError("R-hat needs at least 2 chains");
    const std::size_t n = chains[0].size();
    for (const auto& c : chains) {
        if (c.size() != n) throw ContractError("R-hat needs chains of equal length");
        require_finite_draws(c);
    }
    if (n < min_len) throw ContractError("R-hat needs at least " + std::to_string(min_len) + " draws per chain");
}

}  // namespace

double rhat(std::span<const std::span<const double>> chains) {
    check_chains(chains, 4);
    return potential_scale_reduction(chains, false);
}

double split_rhat(std::span<const std::span<const double>> chains) {
    check_chains(chains, 4);
    const std::size_t half = chains[0].size() / 2;
    std::vector<std::span<const double>> halves;
    for (const auto& c : chains) {
        halves.push_back(c.subspan(0, half));
        halves.push_back(c.subspan(c.size() - half, half));
    }
    return potential_scale_reduction(halves, true);
}

std::vector<DiagnosticRow> diagnostics(std::span<const Chain* const> chains) {
    if (chains.empty()) throw ContractError("diagnostics need at least one chain");
    const SpecKind spec = chains[0]->spec;
    const std::size_t n = chains[0]->draws.size();
    for (const Chain* c : chains) {
        if (c->spec != spec) throw ContractError("diagnostics need chains of the same spec");
        if (c->draws.size() != n) throw ContractError("diagnostics need chains of equal length");
    }
    if (n < 4) throw ContractError("diagnostics need at least 4 draws per chain");

    // series[j] holds chain j's trace of the current quantity.
    std::vector<std::vector<double>> series(chains.size());
    std::vector<DiagnosticRow> rows;
    auto add_row = [&](std::string name) {
        DiagnosticRow row;
        row.name = std::move(name);
        std::vector<double> pooled, first, second;
        std::vector<std::span<const double>> spans;
        for (const auto& s : series) {
            pooled.insert(pooled.end(), s.begin(), s.end());
            first.insert(first.end(), s.begin(), s.begin() + static_cast<std::ptrdiff_t>(n / 2));
            second.insert(second.end(), s.end() - static_cast<std::ptrdiff_t>(n / 2), s.end());
            spans.emplace_back(s);
            row.ess += effective_sample_size(s);
        }
        const Moments mo = moments(pooled);
        row.mean = mo.mean;
        row.sd = std::sqrt(mo.var);
        row.first_half_mean = moments(first).mean;
        row.second_half_mean = moments(second).mean;
        if (spans.size() >= 2) {
            row.rhat = rhat(spans);
            row.split_rhat = split_rhat(spans);
        }
        rows.push_back(std::move(row));
    };

    const auto free = free_parameters(spec);
    for (std::size_t p = 0; p < ParameterVector::kSize; ++p) {
        if (!free[p]) continue;
        for (std::size_t j = 0; j < chains.size(); ++j) {
            series[j].clear();
            for (const ParameterVector& t : chains[j]->draws) series[j].push_back(t.flatten()[p]);
        }
        add_row(ParameterVector::names()[p]);
    }
    for (std::size_t k = 0; k < ate_contrasts().size(); ++k) {
        for (std::size_t j = 0; j < chains.size(); ++j) series[j] = functional_draws(*chains[j], Functional::ate(k));
        add_row(ate_contrasts()[k].name());
    }
    return rows;
}

}  // namespace seqlsi
