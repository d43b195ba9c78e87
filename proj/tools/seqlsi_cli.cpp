// seqlsi command-line front end. Links only the C API.

#include <seqlsi/seqlsi.h>

#include <CLI11.hpp>

#include <array>
#include <cstdio>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace {

constexpr int kExitUser = 2;
constexpr int kExitNumerical = 3;

struct Failure {
    int code;
    std::string message;
};

int exit_code(seqlsi_status s) {
    return (s == SEQLSI_ERR_NUMERICAL || s == SEQLSI_ERR_INTERNAL) ? kExitNumerical : kExitUser;
}

void check(seqlsi_status s, const std::string& what) {
    if (s != SEQLSI_OK) throw Failure{exit_code(s), what + ": " + seqlsi_last_error()};
}

struct DatasetFree { void operator()(seqlsi_dataset* p) const { seqlsi_dataset_free(p); } };
struct ScenarioFree { void operator()(seqlsi_scenario* p) const { seqlsi_scenario_free(p); } };
struct ChainFree { void operator()(seqlsi_chain* p) const { seqlsi_chain_free(p); } };
using DatasetPtr = std::unique_ptr<seqlsi_dataset, DatasetFree>;
using ScenarioPtr = std::unique_ptr<seqlsi_scenario, ScenarioFree>;
using ChainPtr = std::unique_ptr<seqlsi_chain, ChainFree>;

DatasetPtr load_dataset(const std::string& path) {
    seqlsi_dataset* d = nullptr;
    check(seqlsi_dataset_read(path.c_str(), &d), "reading dataset");
    return DatasetPtr(d);
}

ScenarioPtr load_scenario(const std::string& path) {
    seqlsi_scenario* s = nullptr;
    check(seqlsi_scenario_load(path.c_str(), &s), "reading scenario");
    return ScenarioPtr(s);
}

std::vector<ChainPtr> load_chains(const std::vector<std::string>& paths) {
    std::vector<ChainPtr> out;
    for (const auto& p : paths) {
        seqlsi_chain* c = nullptr;
        check(seqlsi_chain_read(p.c_str(), &c), "reading chain '" + p + "'");
        out.emplace_back(c);
    }
    return out;
}

std::vector<const seqlsi_chain*> raw(const std::vector<ChainPtr>& chains) {
    std::vector<const seqlsi_chain*> out;
    for (const auto& c : chains) out.push_back(c.get());
    return out;
}

std::array<double, SEQLSI_N_CONTRASTS> scenario_truth(const std::string& path) {
    const auto s = load_scenario(path);
    double theta[SEQLSI_THETA_SIZE];
    check(seqlsi_scenario_theta(s.get(), theta), "scenario");
    std::array<double, SEQLSI_N_CONTRASTS> t{};
    check(seqlsi_true_ates(theta, t.data()), "true ATEs");
    return t;
}

// chain.csv -> chain_2.csv
std::string chain_output(const std::string& path, int k, int total) {
    if (total == 1) return path;
    const auto slash = path.find_last_of('/');
    const auto dot = path.find_last_of('.');
    const bool has_ext = dot != std::string::npos && (slash == std::string::npos || dot > slash);
    const std::string suffix = "_" + std::to_string(k + 1);
    return has_ext ? path.substr(0, dot) + suffix + path.substr(dot) : path + suffix;
}

// ---- commands -------------------------------------------------------------------------

struct SimulateArgs {
    std::string config, output = "-";
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> n;
    bool with_truth = false;
};

void cmd_simulate(const SimulateArgs& a) {
    const auto s = load_scenario(a.config);
    if (a.seed) check(seqlsi_scenario_set_seed(s.get(), *a.seed), "--seed");
    if (a.n) check(seqlsi_scenario_set_n(s.get(), *a.n), "--n");
    seqlsi_dataset* raw_d = nullptr;
    check(seqlsi_simulate(s.get(), &raw_d), "simulating");
    const DatasetPtr d(raw_d);
    check(seqlsi_dataset_write(d.get(), a.output.c_str(), a.with_truth ? 1 : 0), "writing dataset");
    if (a.output != "-") check(seqlsi_scenario_write_meta(s.get(), (a.output + ".meta.json").c_str()), "writing metadata");
}

struct FitArgs {
    std::string data, output, spec = "lsi", config, init;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> burn, kept, thin;
    int chains = 1;
    bool quiet = false;
};

void cmd_fit(const FitArgs& a) {
    seqlsi_spec spec;
    check(seqlsi_spec_parse(a.spec.c_str(), &spec), "--spec");
    seqlsi_mcmc_config cfg;
    seqlsi_mcmc_config_default(&cfg);
    if (!a.config.empty()) check(seqlsi_mcmc_config_load(a.config.c_str(), &cfg), "reading mcmc config");
    if (a.seed) cfg.seed = *a.seed;
    if (a.burn) cfg.burn_in = *a.burn;
    if (a.kept) cfg.kept = *a.kept;
    if (a.thin) cfg.thin = *a.thin;
    if (a.init == "warm") cfg.init = SEQLSI_INIT_WARM;
    if (a.init == "random") cfg.init = SEQLSI_INIT_RANDOM;
    const auto d = load_dataset(a.data);

    const int k = a.chains;
    std::vector<seqlsi_chain*> out(k, nullptr);
    std::vector<seqlsi_status> status(k, SEQLSI_OK);
    std::vector<std::string> errors(k);
    auto run = [&](int i) {
        seqlsi_mcmc_config c = cfg;
        if (k > 1) c.seed = seqlsi_derive_seed(cfg.seed, static_cast<std::uint64_t>(i));
        status[i] = seqlsi_fit(d.get(), spec, &c, &out[i]);
        if (status[i] != SEQLSI_OK) errors[i] = seqlsi_last_error();
    };
    if (k == 1) {
        run(0);
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < k; ++i) pool.emplace_back(run, i);
        for (auto& t : pool) t.join();
    }
    std::vector<ChainPtr> owned;
    for (auto* c : out) owned.emplace_back(c);
    for (int i = 0; i < k; ++i)
        if (status[i] != SEQLSI_OK)
            throw Failure{exit_code(status[i]), "chain " + std::to_string(i + 1) + ": " + errors[i]};
    for (int i = 0; i < k; ++i) {
        const std::string path = chain_output(a.output, i, k);
        check(seqlsi_chain_write(owned[i].get(), path.c_str()), "writing chain");
        if (!a.quiet)
            std::fprintf(stderr, "%s: %zu draws, spec %s, %.1f s\n", path.c_str(), seqlsi_chain_size(owned[i].get()),
                         seqlsi_spec_name(spec), seqlsi_chain_wall_seconds(owned[i].get()));
    }
}

struct SummarizeArgs {
    std::vector<std::string> chains;
    std::string output = "-", truth, density;
    std::size_t grid = 512;
};

void cmd_summarize(const SummarizeArgs& a) {
    const auto chains = load_chains(a.chains);
    std::optional<std::array<double, SEQLSI_N_CONTRASTS>> truth;
    if (!a.truth.empty()) truth = scenario_truth(a.truth);
    const auto ptrs = raw(chains);
    check(seqlsi_write_summary(ptrs.data(), ptrs.size(), truth ? truth->data() : nullptr, a.output.c_str()),
          "writing summary");
    if (!a.density.empty())
        for (std::size_t i = 0; i < chains.size(); ++i) {
            std::string prefix = a.density;
            if (chains.size() > 1) prefix += std::string(seqlsi_spec_name(seqlsi_chain_spec(chains[i].get()))) + "_" +
                                             std::to_string(i + 1) + "_";
            check(seqlsi_write_densities(chains[i].get(), prefix.c_str(), a.grid), "writing densities");
        }
}

struct DiagnoseArgs {
    std::vector<std::string> chains;
    std::string output = "-";
};

void cmd_diagnose(const DiagnoseArgs& a) {
    const auto chains = load_chains(a.chains);
    const auto ptrs = raw(chains);
    check(seqlsi_write_diagnostics(ptrs.data(), ptrs.size(), a.output.c_str()), "writing diagnostics");
}

struct SensitivityArgs {
    std::string chain, output = "-", assign_out;
    double level = 0.95;
};

void cmd_sensitivity(const SensitivityArgs& a) {
    const auto chains = load_chains({a.chain});
    check(seqlsi_sensitivity(chains[0].get(), a.level, nullptr, a.output.c_str(),
                             a.assign_out.empty() ? nullptr : a.assign_out.c_str()),
          "sensitivity");
}

struct IpwArgs {
    std::string data, output = "-", truth;
    std::size_t reps = 500;
    std::uint64_t seed = 1;
};

void cmd_ipw(const IpwArgs& a) {
    const auto d = load_dataset(a.data);
    std::optional<std::array<double, SEQLSI_N_CONTRASTS>> truth;
    if (!a.truth.empty()) truth = scenario_truth(a.truth);
    check(seqlsi_ipw(d.get(), a.reps, a.seed, truth ? truth->data() : nullptr, nullptr, a.output.c_str()), "ipw");
}

struct CalibrateArgs {
    std::string config, output = "-";
    std::vector<double> offsets;
};

void cmd_calibrate(const CalibrateArgs& a) {
    const auto s = load_scenario(a.config);
    double theta[SEQLSI_THETA_SIZE], calibrated[SEQLSI_THETA_SIZE];
    check(seqlsi_scenario_theta(s.get(), theta), "scenario");
    check(seqlsi_calibrate_intercepts(theta, a.offsets.data(), calibrated), "calibrating");
    check(seqlsi_scenario_set_theta(s.get(), calibrated), "calibrated theta");
    check(seqlsi_scenario_write(s.get(), a.output.c_str()), "writing scenario");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian sequential-treatment inference under latent sequential ignorability"};
    app.set_version_flag("--version", std::string(seqlsi_version()));
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* c_sim = app.add_subcommand("simulate", "Generate a dataset from a scenario config");
    c_sim->add_option("config", sim.config, "Scenario config (seqlsi.scenario/1)")->required();
    c_sim->add_option("-o,--output", sim.output, "Dataset CSV ('-' for stdout)");
    c_sim->add_option("--seed", sim.seed, "Override the scenario seed");
    c_sim->add_option("--n", sim.n, "Override the sample size");
    c_sim->add_flag("--with-truth", sim.with_truth, "Include latent strata and potential outcomes");

    FitArgs fit;
    auto* c_fit = app.add_subcommand("fit", "Run the Gibbs sampler on a dataset");
    c_fit->add_option("data", fit.data, "Dataset CSV")->required();
    c_fit->add_option("-o,--output", fit.output, "Chain CSV")->required();
    c_fit->add_option("--spec", fit.spec, "lsi | si1 | si2");
    c_fit->add_option("--config", fit.config, "MCMC config (seqlsi.mcmc/1)");
    c_fit->add_option("--seed", fit.seed);
    c_fit->add_option("--burn", fit.burn, "Burn-in iterations");
    c_fit->add_option("--kept", fit.kept, "Kept draws");
    c_fit->add_option("--thin", fit.thin);
    c_fit->add_option("--chains", fit.chains, "Independent chains run concurrently")->check(CLI::Range(1, 64));
    c_fit->add_option("--init", fit.init, "warm | random")->check(CLI::IsMember({"warm", "random"}));
    c_fit->add_flag("-q,--quiet", fit.quiet);

    SummarizeArgs sum;
    auto* c_sum = app.add_subcommand("summarize", "Posterior summary table of one or more chains");
    c_sum->add_option("chains", sum.chains, "Chain CSVs")->required();
    c_sum->add_option("-o,--output", sum.output);
    c_sum->add_option("--truth", sum.truth, "Scenario config supplying the true ATEs");
    c_sum->add_option("--density", sum.density, "Prefix for per-ATE density grids");
    c_sum->add_option("--grid", sum.grid, "Density grid points")->check(CLI::Range(2, 100000));

    DiagnoseArgs diag;
    auto* c_diag = app.add_subcommand("diagnose", "ESS and R-hat across chains");
    c_diag->add_option("chains", diag.chains, "Chain CSVs")->required();
    c_diag->add_option("-o,--output", diag.output);

    SensitivityArgs sens;
    auto* c_sens = app.add_subcommand("sensitivity", "Assignment-probability gaps of an LSI chain");
    c_sens->add_option("chain", sens.chain)->required();
    c_sens->add_option("-o,--output", sens.output);
    c_sens->add_option("--level", sens.level, "Credible level")->check(CLI::Range(0.5, 0.9999));
    c_sens->add_option("--assign-out", sens.assign_out, "Per-stratum assignment probability table");

    IpwArgs ipw;
    auto* c_ipw = app.add_subcommand("ipw", "IPW estimate of the saturated marginal structural model");
    c_ipw->add_option("data", ipw.data)->required();
    c_ipw->add_option("-o,--output", ipw.output);
    c_ipw->add_option("--bootstrap-reps", ipw.reps)->check(CLI::Range(0, 1000000));
    c_ipw->add_option("--seed", ipw.seed);
    c_ipw->add_option("--truth", ipw.truth, "Scenario config supplying the true ATEs");

    CalibrateArgs cal;
    auto* c_cal = app.add_subcommand("calibrate", "Shift outcome intercepts to hit target mean offsets");
    c_cal->add_option("config", cal.config)->required();
    c_cal->add_option("--offsets", cal.offsets, "E[Y2(10)], E[Y2(01)], E[Y2(11)] minus E[Y2(00)]")
        ->expected(3)
        ->required();
    c_cal->add_option("-o,--output", cal.output);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUser;
    }

    try {
        if (c_sim->parsed()) cmd_simulate(sim);
        else if (c_fit->parsed()) cmd_fit(fit);
        else if (c_sum->parsed()) cmd_summarize(sum);
        else if (c_diag->parsed()) cmd_diagnose(diag);
        else if (c_sens->parsed()) cmd_sensitivity(sens);
        else if (c_ipw->parsed()) cmd_ipw(ipw);
        else if (c_cal->parsed()) cmd_calibrate(cal);
    } catch (const Failure& f) {
        std::fprintf(stderr, "seqlsi: %s\n", f.message.c_str());
        return f.code;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "seqlsi: %s\n", e.what());
        return kExitNumerical;
    }
    return 0;
}
