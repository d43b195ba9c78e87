#include "warmstart.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include "error.hpp"
#include "normal.hpp"

namespace seqlsi {

namespace {

constexpr double kProbFloor = 1e-6;
constexpr double kVarFloor = 1e-8;

double clamp_prob(double p) { return std::clamp(p, kProbFloor, 1.0 - kProbFloor); }

struct CellData {
    int w1 = 0, y1 = 0, w2 = 0, seq = 0;
    Stratum a{}, b{};
    std::vector<double> y;
    double median = 0.0;
};

struct State {
    std::array<double, 4> pi{};
    std::array<std::array<double, 4>, 2> h{};  // LSI: [w1][g]; SI-1: [w1][y1] in slots 0, 1
    std::array<std::array<double, 4>, 4> mean{};
    std::array<double, 4> sigma2{};
};

// Maps a saturated indicator parametrization (value per stratum) to the 4 coefficients.
std::array<double, 4> to_coefs(const std::array<double, 4>& v) {
    const double v00 = v[index(Stratum::S00)], v01 = v[index(Stratum::S01)];
    const double v10 = v[index(Stratum::S10)], v11 = v[index(Stratum::S11)];
    return {v00, v10 - v00, v01 - v00, v11 - v10 - v01 + v00};
}

class Em {
public:
    Em(const Dataset& data, SpecKind spec) : spec_(spec), n_(data.size()) {
        for (int k = 0; k < 8; ++k) {
            CellData& c = cells_[k];
            c.w1 = k >> 2;
            c.y1 = (k >> 1) & 1;
            c.w2 = k & 1;
            c.seq = TreatmentSequence{c.w1, c.w2}.index();
            std::tie(c.a, c.b) = latent_pair(c.w1, c.y1);
        }
        for (const Unit& u : data.units) {
            if (u.w1 > 1 || u.y1_obs > 1 || u.w2 > 1) throw ContractError("unit " + std::to_string(u.id) + ": non-binary field");
            if (!std::isfinite(u.y2_obs)) throw DomainError("unit " + std::to_string(u.id) + ": y2_obs not finite");
            cells_[cell_index(u.w1, u.y1_obs, u.w2)].y.push_back(u.y2_obs);
        }
        double total = 0.0, total_sq = 0.0;
        for (CellData& c : cells_) {
            std::vector<double> sorted = c.y;
            std::sort(sorted.begin(), sorted.end());
            if (!sorted.empty()) c.median = sorted[sorted.size() / 2];
            for (double v : c.y) {
                total += v;
                total_sq += v * v;
            }
            resp_[&c - cells_.data()].resize(c.y.size());
        }
        const double nn = static_cast<double>(n_);
        grand_mean_ = total / nn;
        var_floor_ = kVarFloor * (1.0 + std::max(total_sq / nn - grand_mean_ * grand_mean_, 0.0));
        for (int w1 = 0; w1 < 2; ++w1)
            for (int y1 = 0; y1 < 2; ++y1) {
                const double n1 = static_cast<double>(cells_[cell_index(w1, y1, 1)].y.size());
                const double n0 = static_cast<double>(cells_[cell_index(w1, y1, 0)].y.size());
                obs_h_[w1][y1] = n0 + n1 > 0 ? clamp_prob(n1 / (n0 + n1)) : 0.5;
            }
    }

    // Hard-ish median split; bit k of `orientation` puts cell k's upper half in stratum a.
    void reset(unsigned orientation) {
        for (int k = 0; k < 8; ++k) {
            const bool a_upper = (orientation >> k) & 1u;
            const CellData& c = cells_[k];
            for (std::size_t i = 0; i < c.y.size(); ++i) {
                const bool upper = c.y[i] > c.median;
                resp_[k][i] = upper == a_upper ? 0.95 : 0.05;
            }
        }
        m_step();
    }

    // One E-step followed by an M-step; returns the log-likelihood at the pre-update state.
    double iterate() {
        const double ll = e_step();
        m_step();
        return ll;
    }

    ParameterVector theta() const {
        ParameterVector t;
        const double p11 = clamp_prob(state_.pi[index(Stratum::S11)]);
        const double p00 = state_.pi[index(Stratum::S00)];
        const double p10 = state_.pi[index(Stratum::S10)];
        const double p01 = state_.pi[index(Stratum::S01)];
        t.alpha[0] = norm_quantile(1.0 - p11);
        t.alpha[1] = norm_quantile(clamp_prob(1.0 - p00 / (1.0 - p11)));
        t.alpha[2] = p10 + p01 > 0.0 ? norm_quantile(clamp_prob(p01 / (p10 + p01))) : 0.0;
        for (int w1 = 0; w1 < 2; ++w1) {
            if (spec_ == SpecKind::LSI) {
                std::array<double, 4> idx{};
                for (Stratum g : kAllStrata) idx[index(g)] = norm_quantile(state_.h[w1][index(g)]);
                t.gamma[w1] = to_coefs(idx);
            } else {
                const double g0 = norm_quantile(obs_h_[w1][0]);
                t.gamma[w1][kIntercept] = g0;
                t.gamma[w1][observed_slope_slot(w1)] = norm_quantile(obs_h_[w1][1]) - g0;
            }
        }
        for (int s = 0; s < 4; ++s) {
            t.beta[s] = to_coefs(state_.mean[s]);
            t.sigma2[s] = state_.sigma2[s];
        }
        return t;
    }

private:
    double e_step() {
        double ll = 0.0;
        std::array<double, 4> log_pi{};
        for (int g = 0; g < 4; ++g) log_pi[g] = std::log(clamp_prob(state_.pi[g]));
        for (int k = 0; k < 8; ++k) {
            const CellData& c = cells_[k];
            if (c.y.empty()) continue;
            const int a = index(c.a), b = index(c.b);
            double ca = log_pi[a], cb = log_pi[b];
            double common = 0.0;
            if (spec_ == SpecKind::LSI) {
                ca += std::log(c.w2 ? state_.h[c.w1][a] : 1.0 - state_.h[c.w1][a]);
                cb += std::log(c.w2 ? state_.h[c.w1][b] : 1.0 - state_.h[c.w1][b]);
            } else {
                common += std::log(c.w2 ? obs_h_[c.w1][c.y1] : 1.0 - obs_h_[c.w1][c.y1]);
            }
            const double s2 = state_.sigma2[c.seq];
            common -= 0.5 * std::log(2.0 * std::numbers::pi * s2);
            const double half_prec = 0.5 / s2;
            const double ma = state_.mean[c.seq][a], mb = state_.mean[c.seq][b];
            for (std::size_t i = 0; i < c.y.size(); ++i) {
                const double da = c.y[i] - ma, db = c.y[i] - mb;
                const double la = ca - half_prec * da * da;
                const double lb = cb - half_prec * db * db;
                ll += log_sum_exp(la, lb) + common;
                resp_[k][i] = 1.0 / (1.0 + std::exp(lb - la));
            }
        }
        return ll;
    }

    void m_step() {
        std::array<double, 4> n_g{};
        std::array<std::array<double, 4>, 2> treated{}, total{};
        std::array<std::array<double, 4>, 4> w{}, sum{}, sumsq{};
        std::array<double, 4> n_s{};
        for (int k = 0; k < 8; ++k) {
            const CellData& c = cells_[k];
            const int a = index(c.a), b = index(c.b);
            for (std::size_t i = 0; i < c.y.size(); ++i) {
                const double r = resp_[k][i];
                const double y = c.y[i];
                w[c.seq][a] += r;
                w[c.seq][b] += 1.0 - r;
                sum[c.seq][a] += r * y;
                sum[c.seq][b] += (1.0 - r) * y;
                sumsq[c.seq][a] += r * y * y;
                sumsq[c.seq][b] += (1.0 - r) * y * y;
            }
            n_s[c.seq] += static_cast<double>(c.y.size());
        }
        for (int s = 0; s < 4; ++s) {
            const int w1 = TreatmentSequence::from_index(s).w1;
            const int w2 = TreatmentSequence::from_index(s).w2;
            double ssr = 0.0;
            for (int g = 0; g < 4; ++g) {
                n_g[g] += w[s][g];
                total[w1][g] += w[s][g];
                if (w2) treated[w1][g] += w[s][g];
                const double m = w[s][g] > 1e-12 ? sum[s][g] / w[s][g] : grand_mean_;
                state_.mean[s][g] = m;
                ssr += std::max(sumsq[s][g] - w[s][g] * m * m, 0.0);
            }
            state_.sigma2[s] = n_s[s] > 0.0 ? std::max(ssr / n_s[s], var_floor_) : 1.0;
        }
        for (int g = 0; g < 4; ++g) {
            state_.pi[g] = n_g[g] / static_cast<double>(n_);
            for (int w1 = 0; w1 < 2; ++w1)
                state_.h[w1][g] = total[w1][g] > 1e-12 ? clamp_prob(treated[w1][g] / total[w1][g]) : 0.5;
        }
    }

    SpecKind spec_;
    std::size_t n_;
    std::array<CellData, 8> cells_;
    std::array<std::vector<double>, 8> resp_;  // Pr(stratum a) per unit of each cell
    std::array<std::array<double, 2>, 2> obs_h_{};
    double grand_mean_ = 0.0;
    double var_floor_ = kVarFloor;
    State state_;
};

double run_em(Em& em, unsigned orientation, std::size_t iterations, double tolerance) {
    em.reset(orientation);
    double prev = -std::numeric_limits<double>::infinity();
    for (std::size_t it = 0; it < iterations; ++it) {
        const double ll = em.iterate();
        if (ll - prev < tolerance) break;
        prev = ll;
    }
    return prev;
}

}  // namespace

WarmStartResult em_warm_start(const Dataset& data, SpecKind spec, const WarmStartConfig& cfg) {
    if (spec == SpecKind::SI2) throw ContractError("spec si2 has no latent strata: no warm start needed");
    if (data.units.empty()) throw ContractError("warm start needs a nonempty dataset");
    if (cfg.refine_candidates == 0) throw ContractError("warm start needs refine_candidates >= 1");

    Em em(data, spec);
    constexpr unsigned kOrientations = 256;
    std::vector<std::pair<double, unsigned>> screened;
    screened.reserve(kOrientations);
    for (unsigned o = 0; o < kOrientations; ++o)
        screened.emplace_back(run_em(em, o, cfg.screen_iterations, -std::numeric_limits<double>::infinity()), o);
    // Ties broken by orientation so the result does not depend on sort stability.
    std::sort(screened.begin(), screened.end(), [](const auto& l, const auto& r) {
        return l.first != r.first ? l.first > r.first : l.second < r.second;
    });

    WarmStartResult best;
    best.log_likelihood = -std::numeric_limits<double>::infinity();
    best.starts = kOrientations;
    const std::size_t refine = std::min<std::size_t>(cfg.refine_candidates, screened.size());
    for (std::size_t c = 0; c < refine; ++c) {
        run_em(em, screened[c].second, cfg.max_iterations, cfg.tolerance);
        const ParameterVector theta = em.theta();
        const double ll = log_likelihood(theta, data, spec);
        if (ll > best.log_likelihood) {
            best.theta = theta;
            best.log_likelihood = ll;
        }
    }
    if (!std::isfinite(best.log_likelihood)) throw NumericalError("warm start: no candidate with finite likelihood");
    return best;
}

}  // namespace seqlsi
