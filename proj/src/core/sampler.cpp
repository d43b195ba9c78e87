#include "sampler.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "error.hpp"
#include "normal.hpp"
#include "truncnorm.hpp"
#include "warmstart.hpp"

namespace seqlsi {

void validate(const PriorConfig& p) {
    if (!std::isfinite(p.coef_mean)) throw ContractError("prior coef_mean must be finite");
    if (!(p.coef_var > 0.0 && std::isfinite(p.coef_var))) throw ContractError("prior coef_var must be positive");
    if (!(p.sigma2_df > 0.0 && std::isfinite(p.sigma2_df))) throw ContractError("prior sigma2_df must be positive");
    if (!(p.sigma2_scale > 0.0 && std::isfinite(p.sigma2_scale)))
        throw ContractError("prior sigma2_scale must be positive");
}

std::string_view to_string(InitKind k) { return k == InitKind::WarmStart ? "warm" : "random"; }

InitKind init_from_string(std::string_view s) {
    if (s == "warm") return InitKind::WarmStart;
    if (s == "random") return InitKind::Random;
    throw ContractError("unknown init '" + std::string(s) + "' (expected warm or random)");
}

void validate(const McmcConfig& m) {
    if (m.kept == 0) throw ContractError("mcmc kept must be >= 1");
    if (m.thin == 0) throw ContractError("mcmc thin must be >= 1");
    if (m.kept < m.thin) throw ContractError("mcmc kept must be >= thin");
}

namespace {

using Counts = std::array<std::size_t, 2>;  // [response 0, response 1]

struct CellStats {
    std::size_t n = 0;
    double sum = 0.0;
    double sumsq = 0.0;

    void add(double y) {
        ++n;
        sum += y;
        sumsq += y * y;
    }
};

Eigen::VectorXd draw_from_precision(const Eigen::MatrixXd& precision, const Eigen::VectorXd& rhs, Engine& rng,
                                    std::normal_distribution<double>& normal) {
    const Eigen::LLT<Eigen::MatrixXd> llt(precision);
    if (llt.info() != Eigen::Success) throw NumericalError("posterior precision is not positive definite");
    Eigen::VectorXd mean = llt.solve(rhs);
    Eigen::VectorXd eps(rhs.size());
    for (Eigen::Index j = 0; j < eps.size(); ++j) eps[j] = normal(rng);
    // precision = L L'; L' v = eps gives v ~ N(0, precision^{-1}).
    mean += llt.matrixU().solve(eps);
    return mean;
}

Eigen::VectorXd probit_from_counts(const Eigen::MatrixXd& patterns, std::span<const Counts> counts,
                                   const PriorConfig& prior, const Eigen::VectorXd& current, Engine& rng,
                                   std::normal_distribution<double>& normal) {
    const Eigen::Index p = patterns.cols();
    Eigen::MatrixXd precision = Eigen::MatrixXd::Identity(p, p) / prior.coef_var;
    Eigen::VectorXd rhs = Eigen::VectorXd::Constant(p, prior.coef_mean / prior.coef_var);
    constexpr double inf = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < patterns.rows(); ++k) {
        const auto [n0, n1] = counts[static_cast<std::size_t>(k)];
        if (n0 + n1 == 0) continue;
        const Eigen::VectorXd x = patterns.row(k).transpose();
        const double eta = x.dot(current);
        double z_sum = 0.0;
        if (n1 > 0) {
            const TruncatedStdNormal above(-eta, inf);
            for (std::size_t i = 0; i < n1; ++i) z_sum += eta + above(rng);
        }
        if (n0 > 0) {
            const TruncatedStdNormal below(-inf, -eta);
            for (std::size_t i = 0; i < n0; ++i) z_sum += eta + below(rng);
        }
        precision.noalias() += static_cast<double>(n0 + n1) * x * x.transpose();
        rhs += z_sum * x;
    }
    return draw_from_precision(precision, rhs, rng, normal);
}

OutcomeDraw outcome_from_stats(const Eigen::MatrixXd& patterns, std::span<const CellStats> stats,
                               const PriorConfig& prior, double sigma2, Engine& rng,
                               std::normal_distribution<double>& normal) {
    const Eigen::Index p = patterns.cols();
    Eigen::MatrixXd precision = Eigen::MatrixXd::Identity(p, p) / prior.coef_var;
    Eigen::VectorXd rhs = Eigen::VectorXd::Constant(p, prior.coef_mean / prior.coef_var);
    std::size_t n_total = 0;
    for (Eigen::Index k = 0; k < patterns.rows(); ++k) {
        const CellStats& c = stats[static_cast<std::size_t>(k)];
        if (c.n == 0) continue;
        const Eigen::VectorXd x = patterns.row(k).transpose();
        precision.noalias() += (static_cast<double>(c.n) / sigma2) * x * x.transpose();
        rhs += (c.sum / sigma2) * x;
        n_total += c.n;
    }
    OutcomeDraw out;
    out.beta = draw_from_precision(precision, rhs, rng, normal);

    double ssr = 0.0;
    for (Eigen::Index k = 0; k < patterns.rows(); ++k) {
        const CellStats& c = stats[static_cast<std::size_t>(k)];
        if (c.n == 0) continue;
        const double mu = patterns.row(k).dot(out.beta);
        ssr += c.sumsq - 2.0 * mu * c.sum + static_cast<double>(c.n) * mu * mu;
    }
    ssr = std::max(ssr, 0.0);
    const double df = prior.sigma2_df + static_cast<double>(n_total);
    std::gamma_distribution<double> chi2_half(0.5 * df, 2.0);
    out.sigma2 = (prior.sigma2_df * prior.sigma2_scale + ssr) / chi2_half(rng);
    return out;
}

Eigen::MatrixXd strata_patterns() {
    Eigen::MatrixXd m(4, 4);
    for (Stratum g : kAllStrata) {
        const auto x = stratum_design(g);
        for (int c = 0; c < 4; ++c) m(index(g), c) = x[c];
    }
    return m;
}

Eigen::MatrixXd observed_patterns() {
    Eigen::MatrixXd m(2, 2);
    m << 1.0, 0.0, 1.0, 1.0;
    return m;
}

Eigen::MatrixXd intercept_pattern() { return Eigen::MatrixXd::Ones(1, 1); }

double log_assign(double idx, int w2) { return w2 ? log_norm_cdf(idx) : log_norm_cdf(-idx); }

double w2_index(const ParameterVector& t, SpecKind spec, int w1, Stratum g) {
    if (spec == SpecKind::LSI) {
        const auto x = stratum_design(g);
        const auto& c = t.gamma[w1];
        return c[0] * x[0] + c[1] * x[1] + c[2] * x[2] + c[3] * x[3];
    }
    return t.gamma[w1][kIntercept] + t.gamma[w1][observed_slope_slot(w1)] * y1_under(g, w1);
}

void require_finite_state(const ParameterVector& t, std::size_t iteration, const char* block) {
    const auto flat = t.flatten();
    for (std::size_t i = 0; i < flat.size(); ++i)
        if (!std::isfinite(flat[i]))
            throw NumericalError("non-finite state at iteration " + std::to_string(iteration) + ", block " + block +
                                 " (" + ParameterVector::names()[i] + ")");
}

}  // namespace

// ---------------------------------------------------------------------------------------

Eigen::VectorXd update_probit_block(std::span<const std::uint8_t> responses, const IndicatorDesign& design,
                                    const PriorConfig& prior, const Eigen::VectorXd& current, Engine& rng) {
    validate(prior);
    if (design.row_pattern.size() != responses.size())
        throw ContractError("probit block: one design row per response required");
    if (current.size() != design.patterns.cols()) throw ContractError("probit block: coefficient size mismatch");
    std::vector<Counts> counts(static_cast<std::size_t>(design.patterns.rows()), Counts{0, 0});
    for (std::size_t i = 0; i < responses.size(); ++i) {
        const std::size_t k = design.row_pattern[i];
        if (k >= counts.size()) throw ContractError("probit block: pattern index out of range");
        ++counts[k][responses[i] ? 1 : 0];
    }
    std::normal_distribution<double> normal;
    return probit_from_counts(design.patterns, counts, prior, current, rng, normal);
}

OutcomeDraw update_outcome_block(std::span<const double> y, const IndicatorDesign& design, const PriorConfig& prior,
                                 double current_sigma2, Engine& rng) {
    validate(prior);
    if (design.row_pattern.size() != y.size()) throw ContractError("outcome block: one design row per outcome required");
    if (!(current_sigma2 > 0.0)) throw ContractError("outcome block: sigma2 must be positive");
    std::vector<CellStats> stats(static_cast<std::size_t>(design.patterns.rows()));
    for (std::size_t i = 0; i < y.size(); ++i) {
        const std::size_t k = design.row_pattern[i];
        if (k >= stats.size()) throw ContractError("outcome block: pattern index out of range");
        stats[k].add(y[i]);
    }
    std::normal_distribution<double> normal;
    return outcome_from_stats(design.patterns, stats, prior, current_sigma2, rng, normal);
}

std::array<double, 2> stratum_log_weights(const Unit& u, const ParameterVector& theta, SpecKind spec) {
    if (spec == SpecKind::SI2) throw ContractError("spec si2 has no latent strata to augment");
    const auto lp = strata_log_probs(theta.alpha);
    const auto [ga, gb] = latent_pair(u.w1, u.y1_obs);
    const int s = u.sequence().index();
    std::array<double, 2> w{};
    int k = 0;
    for (Stratum g : {ga, gb}) {
        double lw = lp[index(g)] + norm_logpdf(u.y2_obs, outcome_mean(theta.beta[s], g), theta.sigma2[s]);
        if (spec == SpecKind::LSI) lw += log_assign(w2_index(theta, spec, u.w1, g), u.w2);
        w[k++] = lw;
    }
    return w;
}

Stratum augment_stratum(const Unit& u, const ParameterVector& theta, SpecKind spec, Engine& rng) {
    const auto w = stratum_log_weights(u, theta, spec);
    const auto [ga, gb] = latent_pair(u.w1, u.y1_obs);
    if (std::isnan(w[0]) || std::isnan(w[1]) ||
        (w[0] == -std::numeric_limits<double>::infinity() && w[1] == -std::numeric_limits<double>::infinity()))
        throw ContractError("unit " + std::to_string(u.id) + ": both stratum weights vanish (degenerate theta)");
    const double p_first = 1.0 / (1.0 + std::exp(w[1] - w[0]));
    return uniform_open(rng) < p_first ? ga : gb;
}

// ---------------------------------------------------------------------------------------

namespace {

struct UnitRow {
    std::uint8_t w1, y1, w2, seq;
    double y2;
    Stratum first, second;
};

class GibbsRun {
public:
    GibbsRun(const Dataset& data, SpecKind spec, const PriorConfig& priors, const McmcConfig& mcmc,
             const ParameterVector* init)
        : spec_(spec), priors_(priors), rng_(make_engine(mcmc.seed)) {
        rows_.reserve(data.size());
        for (const Unit& u : data.units) {
            if (u.w1 > 1 || u.y1_obs > 1 || u.w2 > 1) throw ContractError("unit " + std::to_string(u.id) + ": non-binary field");
            if (!std::isfinite(u.y2_obs)) throw DomainError("unit " + std::to_string(u.id) + ": y2_obs not finite");
            const auto [a, b] = latent_pair(u.w1, u.y1_obs);
            rows_.push_back({u.w1, u.y1_obs, u.w2, static_cast<std::uint8_t>(u.sequence().index()), u.y2_obs, a, b});
        }
        init_state();
        if (init) {
            validate(*init, spec_);
            theta_ = *init;
        } else if (mcmc.init == InitKind::WarmStart && spec_ != SpecKind::SI2 && !rows_.empty()) {
            theta_ = em_warm_start(data, spec_).theta;
        }
    }

    void sweep(std::size_t iteration) {
        if (spec_ == SpecKind::SI2)
            sweep_observed(iteration);
        else
            sweep_latent(iteration);
    }

    const ParameterVector& theta() const { return theta_; }
    const std::vector<Stratum>& strata() const { return strata_; }

private:
    void init_state() {
        std::array<CellStats, 4> cells{};
        for (const UnitRow& r : rows_) cells[r.seq].add(r.y2);
        for (int s = 0; s < 4; ++s) {
            const auto& c = cells[s];
            double v = 1.0;
            if (c.n >= 2) {
                const double mean = c.sum / static_cast<double>(c.n);
                v = (c.sumsq - static_cast<double>(c.n) * mean * mean) / static_cast<double>(c.n - 1);
                if (!(v > 0.0) || !std::isfinite(v)) v = 1.0;
            }
            theta_.sigma2[s] = v;
        }
        if (spec_ == SpecKind::SI2) {
            // Fixed observed-data tallies.
            for (const UnitRow& r : rows_) {
                ++y1_counts_[r.w1][0][r.y1];
                ++w2_obs_counts_[r.w1][r.y1][r.w2];
                obs_stats_[r.seq][r.y1].add(r.y2);
            }
            return;
        }
        strata_.resize(rows_.size());
        for (std::size_t i = 0; i < rows_.size(); ++i)
            strata_[i] = uniform_open(rng_) < 0.5 ? rows_[i].first : rows_[i].second;
        if (spec_ == SpecKind::SI1)
            for (const UnitRow& r : rows_) ++w2_obs_counts_[r.w1][r.y1][r.w2];
    }

    void sweep_latent(std::size_t iteration) {
        const auto lp = strata_log_probs(theta_.alpha);
        std::array<std::array<std::array<double, 2>, 4>, 2> lh{};
        if (spec_ == SpecKind::LSI)
            for (int w1 = 0; w1 < 2; ++w1)
                for (Stratum g : kAllStrata) {
                    const double idx = w2_index(theta_, spec_, w1, g);
                    lh[w1][index(g)] = {log_norm_cdf(-idx), log_norm_cdf(idx)};
                }
        std::array<std::array<double, 4>, 4> mean{};
        std::array<double, 4> half_prec{};
        for (int s = 0; s < 4; ++s) {
            half_prec[s] = 0.5 / theta_.sigma2[s];
            for (Stratum g : kAllStrata) mean[s][index(g)] = outcome_mean(theta_.beta[s], g);
        }

        std::array<std::size_t, 4> n_g{};
        std::array<std::array<Counts, 4>, 2> w2_counts{};
        std::array<std::array<CellStats, 4>, 4> y_stats{};
        for (std::size_t i = 0; i < rows_.size(); ++i) {
            const UnitRow& r = rows_[i];
            const int a = index(r.first);
            const int b = index(r.second);
            const double da = r.y2 - mean[r.seq][a];
            const double db = r.y2 - mean[r.seq][b];
            double la = lp[a] - half_prec[r.seq] * da * da;
            double lb = lp[b] - half_prec[r.seq] * db * db;
            if (spec_ == SpecKind::LSI) {
                la += lh[r.w1][a][r.w2];
                lb += lh[r.w1][b][r.w2];
            }
            if (std::isnan(la) || std::isnan(lb) ||
                (la == -std::numeric_limits<double>::infinity() && lb == -std::numeric_limits<double>::infinity()))
                throw NumericalError("non-finite state at iteration " + std::to_string(iteration) +
                                     ", block strata (degenerate mixture weights)");
            const double p_first = 1.0 / (1.0 + std::exp(lb - la));
            const Stratum g = uniform_open(rng_) < p_first ? r.first : r.second;
            strata_[i] = g;
            ++n_g[index(g)];
            ++w2_counts[r.w1][index(g)][r.w2];
            y_stats[r.seq][index(g)].add(r.y2);
        }

        // Nested stratum probits; response 1 means the unit passes to the next stage.
        const std::size_t n00 = n_g[index(Stratum::S00)], n01 = n_g[index(Stratum::S01)];
        const std::size_t n10 = n_g[index(Stratum::S10)], n11 = n_g[index(Stratum::S11)];
        const std::array<Counts, 3> stage{{{n11, n00 + n10 + n01}, {n00, n10 + n01}, {n10, n01}}};
        for (int k = 0; k < 3; ++k) {
            Eigen::VectorXd cur(1);
            cur[0] = theta_.alpha[k];
            theta_.alpha[k] = probit_from_counts(intercept_, std::span(&stage[k], 1), priors_, cur, rng_, normal_)[0];
        }
        require_finite_state(theta_, iteration, "alpha");

        for (int w1 = 0; w1 < 2; ++w1) {
            if (spec_ == SpecKind::LSI) {
                Eigen::VectorXd cur = Eigen::Map<const Eigen::VectorXd>(theta_.gamma[w1].data(), 4);
                const Eigen::VectorXd next = probit_from_counts(strata_patterns_, w2_counts[w1], priors_, cur, rng_, normal_);
                for (int c = 0; c < 4; ++c) theta_.gamma[w1][c] = next[c];
            } else {
                update_observed_gamma(w1);
            }
        }
        require_finite_state(theta_, iteration, "gamma");

        for (int s = 0; s < 4; ++s) {
            const OutcomeDraw d = outcome_from_stats(strata_patterns_, y_stats[s], priors_, theta_.sigma2[s], rng_, normal_);
            for (int c = 0; c < 4; ++c) theta_.beta[s][c] = d.beta[c];
            theta_.sigma2[s] = d.sigma2;
        }
        require_finite_state(theta_, iteration, "beta/sigma2");
    }

    void update_observed_gamma(int w1) {
        const int slot = observed_slope_slot(w1);
        Eigen::VectorXd cur(2);
        cur << theta_.gamma[w1][kIntercept], theta_.gamma[w1][slot];
        const Eigen::VectorXd next =
            probit_from_counts(observed_patterns_, w2_obs_counts_[w1], priors_, cur, rng_, normal_);
        theta_.gamma[w1][kIntercept] = next[0];
        theta_.gamma[w1][slot] = next[1];
    }

    void sweep_observed(std::size_t iteration) {
        for (int w1 = 0; w1 < 2; ++w1) {
            Eigen::VectorXd cur(1);
            cur[0] = theta_.alpha[w1];
            theta_.alpha[w1] = probit_from_counts(intercept_, y1_counts_[w1], priors_, cur, rng_, normal_)[0];
        }
        require_finite_state(theta_, iteration, "alpha");
        for (int w1 = 0; w1 < 2; ++w1) update_observed_gamma(w1);
        require_finite_state(theta_, iteration, "gamma");
        for (int s = 0; s < 4; ++s) {
            const int slot = observed_slope_slot(TreatmentSequence::from_index(s).w1);
            const OutcomeDraw d = outcome_from_stats(observed_patterns_, obs_stats_[s], priors_, theta_.sigma2[s], rng_, normal_);
            theta_.beta[s][kIntercept] = d.beta[0];
            theta_.beta[s][slot] = d.beta[1];
            theta_.sigma2[s] = d.sigma2;
        }
        require_finite_state(theta_, iteration, "beta/sigma2");
    }

    SpecKind spec_;
    PriorConfig priors_;
    Engine rng_;
    std::normal_distribution<double> normal_;
    std::vector<UnitRow> rows_;
    std::vector<Stratum> strata_;
    ParameterVector theta_;

    const Eigen::MatrixXd intercept_ = intercept_pattern();
    const Eigen::MatrixXd strata_patterns_ = strata_patterns();
    const Eigen::MatrixXd observed_patterns_ = observed_patterns();

    std::array<std::array<Counts, 1>, 2> y1_counts_{};              // SI-2: [w1] -> y1 counts
    std::array<std::array<Counts, 2>, 2> w2_obs_counts_{};          // [w1][y1] -> w2 counts
    std::array<std::array<CellStats, 2>, 4> obs_stats_{};           // SI-2: [seq][y1]
};

}  // namespace

Chain run_gibbs(const Dataset& data, SpecKind spec, const PriorConfig& priors, const McmcConfig& mcmc,
               const ParameterVector* init) {
    validate(priors);
    validate(mcmc);
    const auto start = std::chrono::steady_clock::now();

    GibbsRun run(data, spec, priors, mcmc, init);
    Chain chain;
    chain.spec = spec;
    chain.draws.reserve(mcmc.kept / mcmc.thin);
    const std::size_t total = mcmc.burn_in + mcmc.kept;
    for (std::size_t it = 0; it < total; ++it) {
        run.sweep(it);
        if (it >= mcmc.burn_in && (it - mcmc.burn_in + 1) % mcmc.thin == 0) chain.draws.push_back(run.theta());
    }
    chain.aug_strata_final = run.strata();
    chain.meta.priors = priors;
    chain.meta.mcmc = mcmc;
    chain.meta.n_units = data.size();
    chain.meta.data_seed = data.seed;
    chain.meta.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return chain;
}

}  // namespace seqlsi
