#include "seqlsi/seqlsi.h"

#include <algorithm>
#include <array>
#include <cstdio>
#include <exception>
#include <memory>
#include <new>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "error.hpp"
#include "io.hpp"
#include "model.hpp"
#include "posterior.hpp"
#include "rng.hpp"
#include "sampler.hpp"
#include "sensitivity.hpp"
#include "simgen.hpp"

struct seqlsi_dataset {
    seqlsi::Dataset data;
};

struct seqlsi_scenario {
    seqlsi::ScenarioConfig cfg;
};

struct seqlsi_chain {
    seqlsi::Chain chain;
};

namespace {

thread_local std::string g_last_error;

seqlsi_status fail(seqlsi_status status, const std::string& msg) {
    g_last_error = msg;
    return status;
}

// Maps the core exception hierarchy onto status codes.
template <class F>
seqlsi_status guarded(F&& body) {
    try {
        body();
        return SEQLSI_OK;
    } catch (const seqlsi::ParseError& e) {
        return fail(SEQLSI_ERR_PARSE, e.what());
    } catch (const seqlsi::IoError& e) {
        return fail(SEQLSI_ERR_IO, e.what());
    } catch (const seqlsi::NumericalError& e) {
        return fail(SEQLSI_ERR_NUMERICAL, e.what());
    } catch (const seqlsi::DomainError& e) {
        return fail(SEQLSI_ERR_DOMAIN, e.what());
    } catch (const seqlsi::ContractError& e) {
        return fail(SEQLSI_ERR_INVALID_ARGUMENT, e.what());
    } catch (const std::bad_alloc&) {
        return fail(SEQLSI_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(SEQLSI_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(SEQLSI_ERR_INTERNAL, "unknown error");
    }
}

void need(const void* p, const char* what) {
    if (!p) throw seqlsi::ContractError(std::string(what) + " must not be NULL");
}

seqlsi::SpecKind to_spec(seqlsi_spec s) {
    switch (s) {
        case SEQLSI_SPEC_LSI: return seqlsi::SpecKind::LSI;
        case SEQLSI_SPEC_SI1: return seqlsi::SpecKind::SI1;
        case SEQLSI_SPEC_SI2: return seqlsi::SpecKind::SI2;
    }
    throw seqlsi::ContractError("unknown spec code " + std::to_string(static_cast<int>(s)));
}

seqlsi_spec from_spec(seqlsi::SpecKind s) {
    switch (s) {
        case seqlsi::SpecKind::LSI: return SEQLSI_SPEC_LSI;
        case seqlsi::SpecKind::SI1: return SEQLSI_SPEC_SI1;
        case seqlsi::SpecKind::SI2: return SEQLSI_SPEC_SI2;
    }
    return SEQLSI_SPEC_LSI;
}

seqlsi::ParameterVector theta_in(const double* theta) {
    need(theta, "theta");
    return seqlsi::ParameterVector::unflatten(std::span<const double>(theta, SEQLSI_THETA_SIZE));
}

void theta_out(const seqlsi::ParameterVector& t, double* out) {
    const auto flat = t.flatten();
    std::copy(flat.begin(), flat.end(), out);
}

seqlsi::Stratum stratum_in(int code) {
    if (code < 0 || code > 3) throw seqlsi::ContractError("stratum code must be 0..3");
    return static_cast<seqlsi::Stratum>(code);
}

seqlsi::McmcConfig mcmc_in(const seqlsi_mcmc_config& c) {
    seqlsi::McmcConfig m;
    m.burn_in = c.burn_in;
    m.kept = c.kept;
    m.thin = c.thin;
    m.seed = c.seed;
    if (c.init != SEQLSI_INIT_WARM && c.init != SEQLSI_INIT_RANDOM) throw seqlsi::ContractError("unknown init code");
    m.init = c.init == SEQLSI_INIT_WARM ? seqlsi::InitKind::WarmStart : seqlsi::InitKind::Random;
    return m;
}

seqlsi::PriorConfig priors_in(const seqlsi_mcmc_config& c) {
    return {c.coef_mean, c.coef_var, c.sigma2_df, c.sigma2_scale};
}

std::vector<const seqlsi::Chain*> chains_in(const seqlsi_chain* const* chains, size_t n) {
    need(chains, "chains");
    if (n == 0) throw seqlsi::ContractError("at least one chain is required");
    std::vector<const seqlsi::Chain*> out;
    for (size_t i = 0; i < n; ++i) {
        need(chains[i], "chain");
        out.push_back(&chains[i]->chain);
    }
    return out;
}

std::optional<std::array<double, 6>> truth_in(const double* truth) {
    if (!truth) return std::nullopt;
    std::array<double, 6> t{};
    std::copy(truth, truth + 6, t.begin());
    return t;
}

}  // namespace

extern "C" {

const char* seqlsi_version(void) { return "1.0.0"; }

const char* seqlsi_last_error(void) { return g_last_error.c_str(); }

const char* seqlsi_status_string(seqlsi_status status) {
    switch (status) {
        case SEQLSI_OK: return "ok";
        case SEQLSI_ERR_INVALID_ARGUMENT: return "invalid argument";
        case SEQLSI_ERR_DOMAIN: return "domain error";
        case SEQLSI_ERR_NUMERICAL: return "numerical failure";
        case SEQLSI_ERR_PARSE: return "parse error";
        case SEQLSI_ERR_IO: return "i/o error";
        case SEQLSI_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

seqlsi_status seqlsi_spec_parse(const char* text, seqlsi_spec* out) {
    return guarded([&] {
        need(text, "text");
        need(out, "out");
        *out = from_spec(seqlsi::spec_from_string(text));
    });
}

const char* seqlsi_spec_name(seqlsi_spec spec) {
    switch (spec) {
        case SEQLSI_SPEC_LSI: return "lsi";
        case SEQLSI_SPEC_SI1: return "si1";
        case SEQLSI_SPEC_SI2: return "si2";
    }
    return nullptr;
}

const char* seqlsi_theta_name(size_t i) {
    if (i >= SEQLSI_THETA_SIZE) return nullptr;
    return seqlsi::ParameterVector::names()[i].c_str();
}

const char* seqlsi_contrast_name(size_t k) {
    static const auto names = [] {
        std::array<std::string, 6> n;
        for (size_t i = 0; i < 6; ++i) n[i] = seqlsi::ate_contrasts()[i].name();
        return n;
    }();
    if (k >= names.size()) return nullptr;
    return names[k].c_str();
}

uint64_t seqlsi_derive_seed(uint64_t seed, uint64_t stream) { return seqlsi::derive_seed(seed, stream); }

// ---- model ----------------------------------------------------------------------------

seqlsi_status seqlsi_strata_probs(const double alpha[3], double out[4]) {
    return guarded([&] {
        need(alpha, "alpha");
        need(out, "out");
        const auto pi = seqlsi::strata_probs(std::span<const double, 3>(alpha, 3));
        std::copy(pi.begin(), pi.end(), out);
    });
}

seqlsi_status seqlsi_assign_prob(const double theta[SEQLSI_THETA_SIZE], seqlsi_spec spec, int w1, int stratum,
                                 double* out) {
    return guarded([&] {
        need(out, "out");
        const auto t = theta_in(theta);
        const auto sp = to_spec(spec);
        if (w1 != 0 && w1 != 1) throw seqlsi::ContractError("w1 must be 0 or 1");
        const auto g = stratum_in(stratum);
        seqlsi::validate(t, sp);
        if (sp == seqlsi::SpecKind::SI2)
            throw seqlsi::ContractError("stratum-level assignment probabilities are not defined under si2");
        *out = sp == seqlsi::SpecKind::LSI ? seqlsi::assign_prob_lsi(t.gamma, w1, g)
                                            : seqlsi::assign_prob_si(t.gamma, w1, seqlsi::y1_under(g, w1));
    });
}

seqlsi_status seqlsi_ate(const double theta[SEQLSI_THETA_SIZE], seqlsi_spec spec, size_t contrast, double* out) {
    return guarded([&] {
        need(out, "out");
        if (contrast >= 6) throw seqlsi::ContractError("contrast index must be 0..5");
        const auto& c = seqlsi::ate_contrasts()[contrast];
        *out = seqlsi::ate_from_params(theta_in(theta), c.treated, c.reference, to_spec(spec));
    });
}

seqlsi_status seqlsi_log_likelihood(const double theta[SEQLSI_THETA_SIZE], const seqlsi_dataset* data,
                                    seqlsi_spec spec, double* out) {
    return guarded([&] {
        need(data, "dataset");
        need(out, "out");
        *out = seqlsi::log_likelihood(theta_in(theta), data->data, to_spec(spec));
    });
}

// ---- scenarios ------------------------------------------------------------------------

seqlsi_status seqlsi_scenario_load(const char* path, seqlsi_scenario** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = nullptr;
        auto s = std::make_unique<seqlsi_scenario>();
        s->cfg = seqlsi::load_scenario(path);
        *out = s.release();
    });
}

seqlsi_status seqlsi_scenario_create(const double theta[SEQLSI_THETA_SIZE], seqlsi_spec spec, size_t n, double p_w1,
                                     uint64_t seed, seqlsi_scenario** out) {
    return guarded([&] {
        need(out, "out");
        *out = nullptr;
        auto s = std::make_unique<seqlsi_scenario>();
        s->cfg.theta_true = theta_in(theta);
        s->cfg.spec = to_spec(spec);
        s->cfg.n = n;
        s->cfg.p_w1 = p_w1;
        s->cfg.seed = seed;
        seqlsi::validate(s->cfg);
        *out = s.release();
    });
}

void seqlsi_scenario_free(seqlsi_scenario* s) { delete s; }

seqlsi_status seqlsi_scenario_theta(const seqlsi_scenario* s, double out[SEQLSI_THETA_SIZE]) {
    return guarded([&] {
        need(s, "scenario");
        need(out, "out");
        theta_out(s->cfg.theta_true, out);
    });
}

seqlsi_status seqlsi_scenario_set_seed(seqlsi_scenario* s, uint64_t seed) {
    return guarded([&] {
        need(s, "scenario");
        s->cfg.seed = seed;
    });
}

seqlsi_status seqlsi_scenario_set_n(seqlsi_scenario* s, size_t n) {
    return guarded([&] {
        need(s, "scenario");
        if (n == 0) throw seqlsi::ContractError("scenario needs n > 0");
        s->cfg.n = n;
    });
}

seqlsi_status seqlsi_scenario_set_theta(seqlsi_scenario* s, const double theta[SEQLSI_THETA_SIZE]) {
    return guarded([&] {
        need(s, "scenario");
        seqlsi::ScenarioConfig next = s->cfg;
        next.theta_true = theta_in(theta);
        seqlsi::validate(next);
        s->cfg = next;
    });
}

seqlsi_status seqlsi_scenario_write(const seqlsi_scenario* s, const char* path) {
    return guarded([&] {
        need(s, "scenario");
        need(path, "path");
        const std::string text = seqlsi::format_scenario(s->cfg);
        if (std::string(path) == "-") {
            std::fputs(text.c_str(), stdout);
            return;
        }
        std::FILE* f = std::fopen(path, "wb");
        if (!f) throw seqlsi::IoError(std::string("cannot open '") + path + "' for writing");
        const bool ok = std::fputs(text.c_str(), f) >= 0;
        if (std::fclose(f) != 0 || !ok) throw seqlsi::IoError(std::string("write to '") + path + "' failed");
    });
}

seqlsi_status seqlsi_true_ates(const double theta[SEQLSI_THETA_SIZE], double out[SEQLSI_N_CONTRASTS]) {
    return guarded([&] {
        need(out, "out");
        const auto ates = seqlsi::true_ates(theta_in(theta));
        for (size_t k = 0; k < ates.size(); ++k) out[k] = ates[k].value;
    });
}

seqlsi_status seqlsi_calibrate_intercepts(const double theta[SEQLSI_THETA_SIZE], const double offsets[3],
                                          double out[SEQLSI_THETA_SIZE]) {
    return guarded([&] {
        need(offsets, "offsets");
        need(out, "out");
        theta_out(seqlsi::calibrate_intercepts(theta_in(theta), {offsets[0], offsets[1], offsets[2]}), out);
    });
}

seqlsi_status seqlsi_simulate(const seqlsi_scenario* s, seqlsi_dataset** out) {
    return guarded([&] {
        need(s, "scenario");
        need(out, "out");
        *out = nullptr;
        auto d = std::make_unique<seqlsi_dataset>();
        d->data = seqlsi::generate(s->cfg);
        *out = d.release();
    });
}

seqlsi_status seqlsi_scenario_write_meta(const seqlsi_scenario* s, const char* path) {
    return guarded([&] {
        need(s, "scenario");
        need(path, "path");
        seqlsi::write_scenario_meta(path, s->cfg);
    });
}

// ---- datasets -------------------------------------------------------------------------

seqlsi_status seqlsi_dataset_read(const char* path, seqlsi_dataset** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = nullptr;
        auto d = std::make_unique<seqlsi_dataset>();
        d->data = seqlsi::read_dataset_csv(std::string(path));
        *out = d.release();
    });
}

seqlsi_status seqlsi_dataset_write(const seqlsi_dataset* d, const char* path, int with_truth) {
    return guarded([&] {
        need(d, "dataset");
        need(path, "path");
        seqlsi::write_dataset_csv(std::string(path), d->data, with_truth != 0);
    });
}

void seqlsi_dataset_free(seqlsi_dataset* d) { delete d; }

size_t seqlsi_dataset_size(const seqlsi_dataset* d) { return d ? d->data.size() : 0; }

int seqlsi_dataset_has_truth(const seqlsi_dataset* d) { return d && d->data.has_truth() ? 1 : 0; }

// ---- fitting --------------------------------------------------------------------------

void seqlsi_mcmc_config_default(seqlsi_mcmc_config* cfg) {
    if (!cfg) return;
    const seqlsi::McmcConfig m;
    const seqlsi::PriorConfig p;
    cfg->burn_in = m.burn_in;
    cfg->kept = m.kept;
    cfg->thin = m.thin;
    cfg->seed = m.seed;
    cfg->init = SEQLSI_INIT_WARM;
    cfg->coef_mean = p.coef_mean;
    cfg->coef_var = p.coef_var;
    cfg->sigma2_df = p.sigma2_df;
    cfg->sigma2_scale = p.sigma2_scale;
}

seqlsi_status seqlsi_mcmc_config_load(const char* path, seqlsi_mcmc_config* cfg) {
    return guarded([&] {
        need(path, "path");
        need(cfg, "cfg");
        // Start from the caller's values so keys absent from the file keep them.
        seqlsi::FitConfig base{priors_in(*cfg), mcmc_in(*cfg)};
        const seqlsi::FitConfig loaded = seqlsi::load_fit_config(path);
        const seqlsi::FitConfig defaults;
        seqlsi::KeyValueFile f = seqlsi::KeyValueFile::load(path);
        auto pick = [&](const char* key, auto& dst, const auto& src) {
            if (f.has(key)) dst = src;
        };
        pick("burn_in", base.mcmc.burn_in, loaded.mcmc.burn_in);
        pick("kept", base.mcmc.kept, loaded.mcmc.kept);
        pick("thin", base.mcmc.thin, loaded.mcmc.thin);
        pick("seed", base.mcmc.seed, loaded.mcmc.seed);
        pick("init", base.mcmc.init, loaded.mcmc.init);
        pick("coef_mean", base.priors.coef_mean, loaded.priors.coef_mean);
        pick("coef_var", base.priors.coef_var, loaded.priors.coef_var);
        pick("sigma2_df", base.priors.sigma2_df, loaded.priors.sigma2_df);
        pick("sigma2_scale", base.priors.sigma2_scale, loaded.priors.sigma2_scale);
        cfg->burn_in = base.mcmc.burn_in;
        cfg->kept = base.mcmc.kept;
        cfg->thin = base.mcmc.thin;
        cfg->seed = base.mcmc.seed;
        cfg->init = base.mcmc.init == seqlsi::InitKind::WarmStart ? SEQLSI_INIT_WARM : SEQLSI_INIT_RANDOM;
        cfg->coef_mean = base.priors.coef_mean;
        cfg->coef_var = base.priors.coef_var;
        cfg->sigma2_df = base.priors.sigma2_df;
        cfg->sigma2_scale = base.priors.sigma2_scale;
    });
}

seqlsi_status seqlsi_fit(const seqlsi_dataset* d, seqlsi_spec spec, const seqlsi_mcmc_config* cfg,
                         seqlsi_chain** out) {
    return guarded([&] {
        need(d, "dataset");
        need(cfg, "cfg");
        need(out, "out");
        *out = nullptr;
        auto c = std::make_unique<seqlsi_chain>();
        c->chain = seqlsi::run_gibbs(d->data, to_spec(spec), priors_in(*cfg), mcmc_in(*cfg));
        *out = c.release();
    });
}

// ---- chains ---------------------------------------------------------------------------

seqlsi_status seqlsi_chain_read(const char* path, seqlsi_chain** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = nullptr;
        auto c = std::make_unique<seqlsi_chain>();
        c->chain = seqlsi::read_chain(path);
        *out = c.release();
    });
}

seqlsi_status seqlsi_chain_write(const seqlsi_chain* c, const char* path) {
    return guarded([&] {
        need(c, "chain");
        need(path, "path");
        seqlsi::write_chain(path, c->chain);
    });
}

void seqlsi_chain_free(seqlsi_chain* c) { delete c; }

seqlsi_spec seqlsi_chain_spec(const seqlsi_chain* c) { return c ? from_spec(c->chain.spec) : SEQLSI_SPEC_LSI; }

size_t seqlsi_chain_size(const seqlsi_chain* c) { return c ? c->chain.draws.size() : 0; }

double seqlsi_chain_wall_seconds(const seqlsi_chain* c) { return c ? c->chain.meta.wall_seconds : 0.0; }

seqlsi_status seqlsi_chain_draw(const seqlsi_chain* c, size_t i, double out[SEQLSI_THETA_SIZE]) {
    return guarded([&] {
        need(c, "chain");
        need(out, "out");
        if (i >= c->chain.draws.size()) throw seqlsi::ContractError("draw index out of range");
        theta_out(c->chain.draws[i], out);
    });
}

seqlsi_status seqlsi_chain_ate_draws(const seqlsi_chain* c, size_t k, double* out) {
    return guarded([&] {
        need(c, "chain");
        need(out, "out");
        const auto v = seqlsi::functional_draws(c->chain, seqlsi::Functional::ate(k));
        std::copy(v.begin(), v.end(), out);
    });
}

// ---- reports --------------------------------------------------------------------------

seqlsi_status seqlsi_summarize(const double* draws, size_t n, seqlsi_summary* out) {
    return guarded([&] {
        need(draws, "draws");
        need(out, "out");
        const auto row = seqlsi::summarize("x", std::span<const double>(draws, n));
        *out = {row.mean, row.sd, row.q025, row.q975};
    });
}

seqlsi_status seqlsi_write_summary(const seqlsi_chain* const* chains, size_t n_chains, const double* truth,
                                   const char* path) {
    return guarded([&] {
        need(path, "path");
        seqlsi::write_summary(path, chains_in(chains, n_chains), truth_in(truth));
    });
}

seqlsi_status seqlsi_write_densities(const seqlsi_chain* c, const char* prefix, size_t n_points) {
    return guarded([&] {
        need(c, "chain");
        need(prefix, "prefix");
        for (size_t k = 0; k < 6; ++k) {
            const auto f = seqlsi::Functional::ate(k);
            const auto grid = seqlsi::density_grid(seqlsi::functional_draws(c->chain, f), n_points);
            seqlsi::write_density(std::string(prefix) + f.name() + ".csv", grid);
        }
    });
}

seqlsi_status seqlsi_write_diagnostics(const seqlsi_chain* const* chains, size_t n_chains, const char* path) {
    return guarded([&] {
        need(path, "path");
        const auto cs = chains_in(chains, n_chains);
        seqlsi::write_diagnostics(path, seqlsi::diagnostics(cs));
    });
}

seqlsi_status seqlsi_sensitivity(const seqlsi_chain* c, double level, seqlsi_gap gaps[4], const char* path,
                                 const char* assign_path) {
    return guarded([&] {
        need(c, "chain");
        const auto rows = seqlsi::sensitivity_report(c->chain, level);
        if (gaps)
            for (size_t k = 0; k < rows.size(); ++k) {
                const auto& r = rows[k];
                gaps[k] = {r.pairing.id,
                           r.pairing.w1,
                           seqlsi::index(r.pairing.first),
                           seqlsi::index(r.pairing.second),
                           r.gap.mean,
                           r.gap.sd,
                           r.lower,
                           r.upper,
                           r.excludes_zero ? 1 : 0};
            }
        if (path) seqlsi::write_sensitivity(path, rows);
        if (assign_path) seqlsi::write_assignment_table(assign_path, rows);
    });
}

seqlsi_status seqlsi_ipw(const seqlsi_dataset* d, size_t bootstrap_reps, uint64_t seed, const double* truth,
                         seqlsi_ipw_result* out, const char* path) {
    return guarded([&] {
        need(d, "dataset");
        const auto r = seqlsi::ipw_msm_estimate(d->data, {bootstrap_reps, seed});
        if (out) {
            for (size_t k = 0; k < 6; ++k) {
                const auto& e = r.ates[k];
                out->defined[k] = e.estimate ? 1 : 0;
                out->estimate[k] = e.estimate.value_or(0.0);
                out->se_defined[k] = e.se ? 1 : 0;
                out->se[k] = e.se.value_or(0.0);
                out->reps_used[k] = e.reps_used;
            }
        }
        if (path) seqlsi::write_ipw(path, r, truth_in(truth));
    });
}

}  // extern "C"
