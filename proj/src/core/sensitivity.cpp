#include "sensitivity.hpp"

#include <algorithm>
#include <cmath>

#include "error.hpp"
#include "rng.hpp"

namespace seqlsi {

std::string Pairing::label() const {
    return "w1=" + std::to_string(w1) + ":" + std::string(to_string(first)) + "-" + std::string(to_string(second));
}

const std::array<Pairing, 4>& equality_pairings() {
    static const std::array<Pairing, 4> p{{
        {1, 0, Stratum::S00, Stratum::S01},
        {2, 0, Stratum::S10, Stratum::S11},
        {3, 1, Stratum::S00, Stratum::S10},
        {4, 1, Stratum::S01, Stratum::S11},
    }};
    return p;
}

std::array<std::vector<double>, 4> equality_gaps(const Chain& chain) {
    if (chain.spec != SpecKind::LSI)
        throw ContractError("equality gaps need an LSI chain (got " + std::string(to_string(chain.spec)) + ")");
    std::array<std::vector<double>, 4> gaps;
    for (std::size_t k = 0; k < 4; ++k) {
        const Pairing& p = equality_pairings()[k];
        gaps[k].reserve(chain.draws.size());
        for (const ParameterVector& t : chain.draws)
            gaps[k].push_back(assign_prob_lsi(t.gamma, p.w1, p.first) - assign_prob_lsi(t.gamma, p.w1, p.second));
    }
    return gaps;
}

std::vector<SensitivityRow> sensitivity_report(const Chain& chain, double level) {
    if (!(level > 0.0 && level < 1.0)) throw ContractError("credible level must lie in (0, 1)");
    const auto gaps = equality_gaps(chain);
    std::vector<SensitivityRow> rows;
    for (std::size_t k = 0; k < 4; ++k) {
        const Pairing& p = equality_pairings()[k];
        SensitivityRow row;
        row.pairing = p;
        const Functional f1 = Functional::assign_prob(p.w1, p.first);
        const Functional f2 = Functional::assign_prob(p.w1, p.second);
        row.first = summarize(f1.name(), functional_draws(chain, f1), true);
        row.second = summarize(f2.name(), functional_draws(chain, f2), true);
        row.gap = summarize("gap_" + p.label(), gaps[k], true);
        std::vector<double> sorted = gaps[k];
        std::sort(sorted.begin(), sorted.end());
        row.level = level;
        row.lower = quantile_sorted(sorted, 0.5 * (1.0 - level));
        row.upper = quantile_sorted(sorted, 0.5 * (1.0 + level));
        row.excludes_zero = row.lower > 0.0 || row.upper < 0.0;
        rows.push_back(std::move(row));
    }
    return rows;
}

// ---------------------------------------------------------------------------------------

namespace {

struct CellTotals {
    std::array<double, 8> n{};
    std::array<double, 8> sum{};
};

// Sequence means from cell totals; nullopt where an observed cell is empty.
std::array<std::optional<double>, 4> hajek_means(const CellTotals& c) {
    std::array<std::optional<double>, 4> out;
    std::array<double, 2> n_w1{};
    double n_total = 0.0;
    for (int k = 0; k < 8; ++k) {
        n_w1[k >> 2] += c.n[k];
        n_total += c.n[k];
    }
    for (int s = 0; s < 4; ++s) {
        const auto [w1, w2] = TreatmentSequence::from_index(s);
        const int k0 = cell_index(w1, 0, w2), k1 = cell_index(w1, 1, w2);
        if (c.n[k0] == 0.0 || c.n[k1] == 0.0) continue;
        const double p_w1 = n_w1[w1] / n_total;
        double num = 0.0, den = 0.0;
        for (int y1 = 0; y1 < 2; ++y1) {
            const int k = cell_index(w1, y1, w2);
            const double n_wy = c.n[cell_index(w1, y1, 0)] + c.n[cell_index(w1, y1, 1)];
            const double weight = 1.0 / (p_w1 * (c.n[k] / n_wy));
            num += weight * c.sum[k];
            den += weight * c.n[k];
        }
        out[s] = num / den;
    }
    return out;
}

std::optional<double> contrast_of(const std::array<std::optional<double>, 4>& means, const Contrast& c) {
    const auto& a = means[c.treated.index()];
    const auto& b = means[c.reference.index()];
    if (!a || !b) return std::nullopt;
    return *a - *b;
}

}  // namespace

IpwResult ipw_msm_estimate(const Dataset& data, const IpwConfig& cfg) {
    if (data.units.empty()) throw ContractError("IPW needs a nonempty dataset");
    const std::size_t n = data.size();
    std::vector<std::uint8_t> cell(n);
    std::vector<double> y(n);
    CellTotals totals;
    for (std::size_t i = 0; i < n; ++i) {
        const Unit& u = data.units[i];
        if (u.w1 > 1 || u.y1_obs > 1 || u.w2 > 1) throw ContractError("unit " + std::to_string(u.id) + ": non-binary field");
        if (!std::isfinite(u.y2_obs)) throw DomainError("unit " + std::to_string(u.id) + ": y2_obs not finite");
        cell[i] = static_cast<std::uint8_t>(cell_index(u.w1, u.y1_obs, u.w2));
        y[i] = u.y2_obs;
        totals.n[cell[i]] += 1.0;
        totals.sum[cell[i]] += y[i];
    }

    IpwResult result;
    for (int k = 0; k < 8; ++k)
        if (totals.n[k] == 0.0) result.empty_cells.push_back(k);
    result.sequence_means = hajek_means(totals);

    const auto& contrasts = ate_contrasts();
    std::array<std::vector<double>, 6> boot;
    for (std::size_t r = 0; r < cfg.bootstrap_reps; ++r) {
        SplitMix64 gen(derive_seed(cfg.seed, r));
        CellTotals t;
        for (std::size_t i = 0; i < n; ++i) {
            const auto j = std::min(static_cast<std::size_t>(uniform_open(gen) * static_cast<double>(n)), n - 1);
            t.n[cell[j]] += 1.0;
            t.sum[cell[j]] += y[j];
        }
        const auto means = hajek_means(t);
        for (std::size_t k = 0; k < contrasts.size(); ++k)
            if (const auto v = contrast_of(means, contrasts[k])) boot[k].push_back(*v);
    }

    for (std::size_t k = 0; k < contrasts.size(); ++k) {
        IpwEstimate& e = result.ates[k];
        e.name = contrasts[k].name();
        e.estimate = contrast_of(result.sequence_means, contrasts[k]);
        e.reps_used = boot[k].size();
        if (!e.estimate) {
            e.note = "undefined: empty observed cell for sequence ";
            const auto& a = result.sequence_means[contrasts[k].treated.index()];
            e.note += a ? to_string(contrasts[k].reference) : to_string(contrasts[k].treated);
        }
        if (boot[k].size() >= 2) {
            double mean = 0.0;
            for (double v : boot[k]) mean += v;
            mean /= static_cast<double>(boot[k].size());
            double ss = 0.0;
            for (double v : boot[k]) ss += (v - mean) * (v - mean);
            e.se = std::sqrt(ss / static_cast<double>(boot[k].size() - 1));
        }
    }
    return result;
}

}  // namespace seqlsi
