#include <doctest.h>

#include <cmath>
#include <numbers>

#include "config.hpp"
#include "error.hpp"
#include "model.hpp"
#include "normal.hpp"
#include "oracles.hpp"
#include "sampler.hpp"
#include "simgen.hpp"
#include "truncnorm.hpp"
#include "warmstart.hpp"

using namespace seqlsi;

namespace {

std::vector<double> tn_draws(double mean, double sd, double lo, double hi, std::size_t n, std::uint64_t seed) {
    Engine rng = make_engine(seed);
    std::vector<double> v(n);
    for (auto& x : v) x = truncated_normal_draw(mean, sd, lo, hi, rng);
    return v;
}

ScenarioConfig small_scenario(const char* name, std::size_t n) {
    auto cfg = load_scenario(std::string(SEQLSI_SOURCE_DIR) + "/configs/" + name);
    cfg.n = n;
    return cfg;
}

IndicatorDesign intercept_design(std::size_t n) {
    IndicatorDesign d;
    d.patterns = Eigen::MatrixXd::Ones(1, 1);
    d.row_pattern.assign(n, 0);
    return d;
}

}  // namespace

TEST_CASE("truncated normal") {
    constexpr double inf = std::numeric_limits<double>::infinity();
    const std::size_t n = 100000;
    SUBCASE("untruncated") {
        const auto v = tn_draws(0, 1, -inf, inf, n, 1);
        CHECK(std::abs(oracle::mean(v)) <= 4.0 / std::sqrt(double(n)));
    }
    SUBCASE("half normal") {
        const auto v = tn_draws(0, 1, 0, inf, n, 2);
        const double m = std::sqrt(2.0 / std::numbers::pi);
        const double se = std::sqrt((1.0 - m * m) / n);
        CHECK(std::abs(oracle::mean(v) - m) <= 4.0 * se);
        for (double x : v) REQUIRE(x > 0.0);
    }
    SUBCASE("bounded support") {
        for (double x : tn_draws(5, 2, 4, 6, n, 3)) REQUIRE((x > 4.0 && x < 6.0));
    }
    SUBCASE("far tail uses the inverse Mills ratio") {
        for (double a : {6.5, 9.0, 20.0}) {
            const auto v = tn_draws(0, 1, a, inf, 20000, 4);
            const double mills = std::exp(norm_logpdf(a, 0, 1) - std::log(double(oracle::phi(-a))));
            const double m = oracle::mean(v);
            CHECK(std::abs(m - mills) <= 4.0 * oracle::sd(v) / std::sqrt(20000.0));
            for (double x : v) REQUIRE(x > a);
        }
        const auto lower = tn_draws(0, 1, -inf, -30.0, 1000, 5);
        for (double x : lower) REQUIRE(x < -30.0);
    }
    SUBCASE("narrow far interval") {
        for (double x : tn_draws(0, 1, 10.0, 10.001, 1000, 6)) REQUIRE((x > 10.0 && x < 10.001));
    }
    SUBCASE("errors") {
        Engine rng = make_engine(1);
        CHECK_THROWS_AS(truncated_normal_draw(0, 1, 2, 2, rng), ContractError);
        CHECK_THROWS_AS(truncated_normal_draw(0, 0, 0, 1, rng), ContractError);
    }
}

TEST_CASE("stratum augmentation") {
    ParameterVector t;  // alpha = 0: pi00 = 0.25, pi01 = 0.125
    Unit u{1, 0, 0, 1, 0.3, std::nullopt};
    SUBCASE("log-space weights match direct arithmetic") {
        t.gamma[0] = {-0.4, 0.3, 0.9, -0.2};
        t.beta[1] = {0.5, 1.0, -0.7, 0.2};
        t.sigma2[1] = 1.7;
        const auto w = stratum_log_weights(u, t, SpecKind::LSI);
        const auto pi = oracle::strata(t.alpha);
        auto direct = [&](int g) {
            const double h = double(oracle::phi(oracle::dot(t.gamma[0], g)));
            const double mu = oracle::dot(t.beta[1], g);
            const double f = std::exp(-0.5 * (0.3 - mu) * (0.3 - mu) / 1.7) / std::sqrt(2 * std::numbers::pi * 1.7);
            return pi[g] * h * f;
        };
        CHECK(std::exp(w[0] - w[1]) == doctest::Approx(direct(0) / direct(1)).epsilon(1e-12));
        const auto w_si = stratum_log_weights(u, with_si_constraint(t), SpecKind::SI1);
        CHECK(std::exp(w_si[0] - w_si[1]) == doctest::Approx(direct(0) / direct(1) *
                                                             double(oracle::phi(oracle::dot(t.gamma[0], 1))) /
                                                             double(oracle::phi(oracle::dot(t.gamma[0], 0))))
                                                 .epsilon(1e-12));
    }
    SUBCASE("equal weights pick each stratum half the time") {
        t.alpha = {0.0, norm_quantile(2.0 / 3.0), 0.0};  // pi00 = pi01
        const auto pi = strata_probs(t.alpha);
        REQUIRE(pi[0] == doctest::Approx(pi[1]).epsilon(1e-12));
        Engine rng = make_engine(9);
        const int n = 40000;
        int first = 0;
        for (int i = 0; i < n; ++i) first += augment_stratum(u, t, SpecKind::LSI, rng) == Stratum::S00;
        CHECK(std::abs(first / double(n) - 0.5) <= 4.0 * 0.5 / std::sqrt(double(n)));
    }
    SUBCASE("SI-2 has nothing to augment") {
        Engine rng = make_engine(1);
        CHECK_THROWS_AS(augment_stratum(u, ParameterVector{}, SpecKind::SI2, rng), ContractError);
    }
}

TEST_CASE("probit block") {
    PriorConfig prior;
    SUBCASE("no observations: prior draws") {
        Engine rng = make_engine(1);
        std::vector<double> v;
        Eigen::VectorXd cur = Eigen::VectorXd::Zero(1);
        for (int i = 0; i < 10000; ++i) {
            cur = update_probit_block({}, intercept_design(0), prior, cur, rng);
            v.push_back(cur[0]);
        }
        for (const auto& q : oracle::normal_quantiles(v, 0.0, 100.0)) CHECK(q.ok(4.0));
    }
    SUBCASE("all ones push the intercept up") {
        Engine rng = make_engine(2);
        std::vector<std::uint8_t> y(10000, 1);
        Eigen::VectorXd cur = Eigen::VectorXd::Zero(1);
        for (int i = 0; i < 200; ++i) cur = update_probit_block(y, intercept_design(y.size()), prior, cur, rng);
        CHECK(cur[0] > 3.0);
    }
    SUBCASE("known intercept is recovered") {
        Engine data_rng = make_engine(3);
        const double truth = -0.6;
        std::vector<std::uint8_t> y(5000);
        for (auto& r : y) r = uniform_open(data_rng) < double(oracle::phi(truth));
        Engine rng = make_engine(4);
        Eigen::VectorXd cur = Eigen::VectorXd::Zero(1);
        std::vector<double> v;
        for (int i = 0; i < 2000; ++i) {
            cur = update_probit_block(y, intercept_design(y.size()), prior, cur, rng);
            if (i >= 200) v.push_back(cur[0]);
        }
        CHECK(std::abs(oracle::mean(v) - truth) <= 4.0 * oracle::sd(v));
    }
}

TEST_CASE("outcome block") {
    PriorConfig prior;
    SUBCASE("empty cell: prior draws") {
        Engine rng = make_engine(5);
        std::vector<double> b, s;
        for (int i = 0; i < 10000; ++i) {
            const auto d = update_outcome_block({}, intercept_design(0), prior, 1.0, rng);
            b.push_back(d.beta[0]);
            s.push_back(d.sigma2);
        }
        for (const auto& q : oracle::normal_quantiles(b, 0.0, 100.0)) CHECK(q.ok(4.0));
        for (const auto& q : oracle::scaled_inv_chi2_quantiles(s, 1.0, 1.0)) CHECK(q.ok(4.0));
    }
    SUBCASE("known cell is recovered; unused direction stays at the prior") {
        // Two patterns in the data, design has a third column never switched on.
        IndicatorDesign d;
        d.patterns.resize(2, 3);
        d.patterns << 1, 0, 0, 1, 1, 0;
        Engine data_rng = make_engine(6);
        std::normal_distribution<double> z;
        const double b0 = 4.0, b1 = -1.5, s2 = 2.0;
        std::vector<double> y;
        for (int i = 0; i < 5000; ++i) {
            const int k = i % 2;
            d.row_pattern.push_back(static_cast<std::uint8_t>(k));
            y.push_back(b0 + b1 * k + std::sqrt(s2) * z(data_rng));
        }
        Engine rng = make_engine(7);
        double cur = 1.0;
        std::vector<double> v0, v1, v2, vs;
        for (int i = 0; i < 3000; ++i) {
            const auto dr = update_outcome_block(y, d, prior, cur, rng);
            cur = dr.sigma2;
            v0.push_back(dr.beta[0]);
            v1.push_back(dr.beta[1]);
            v2.push_back(dr.beta[2]);
            vs.push_back(dr.sigma2);
        }
        CHECK(std::abs(oracle::mean(v0) - b0) <= 4.0 * oracle::sd(v0));
        CHECK(std::abs(oracle::mean(v1) - b1) <= 4.0 * oracle::sd(v1));
        CHECK(std::abs(oracle::mean(vs) - s2) <= 4.0 * oracle::sd(vs));
        CHECK(oracle::sd(v2) == doctest::Approx(10.0).epsilon(0.1));
    }
}

TEST_CASE("run_gibbs") {
    const auto data = generate(small_scenario("scenario_lsi.cfg", 400));
    McmcConfig m;
    m.burn_in = 20;
    m.kept = 60;
    m.thin = 2;
    m.seed = 5;
    SUBCASE("deterministic, thinned, finite, supported") {
        for (SpecKind spec : {SpecKind::LSI, SpecKind::SI1, SpecKind::SI2}) {
            const auto a = run_gibbs(data, spec, {}, m);
            const auto b = run_gibbs(data, spec, {}, m);
            CHECK(a.draws.size() == 30);
            CHECK(a.draws == b.draws);
            CHECK(a.aug_strata_final == b.aug_strata_final);
            for (const auto& t : a.draws) {
                CHECK_NOTHROW(validate(t, spec));
                CHECK(std::isfinite(log_likelihood(t, data, spec)));
            }
            if (spec == SpecKind::SI2) {
                CHECK(a.aug_strata_final.empty());
            } else {
                REQUIRE(a.aug_strata_final.size() == data.size());
                for (std::size_t i = 0; i < data.size(); ++i) {
                    const auto [p, q] = latent_pair(data.units[i].w1, data.units[i].y1_obs);
                    CHECK((a.aug_strata_final[i] == p || a.aug_strata_final[i] == q));
                }
            }
        }
    }
    SUBCASE("seed changes the chain") {
        auto m2 = m;
        m2.seed = 6;
        CHECK(run_gibbs(data, SpecKind::LSI, {}, m).draws != run_gibbs(data, SpecKind::LSI, {}, m2).draws);
    }
    SUBCASE("random init follows the rule-based start") {
        m.init = InitKind::Random;
        const auto a = run_gibbs(data, SpecKind::LSI, {}, m);
        CHECK(a.meta.mcmc.init == InitKind::Random);
        CHECK(a.draws == run_gibbs(data, SpecKind::LSI, {}, m).draws);
    }
    SUBCASE("explicit start is validated") {
        ParameterVector bad;
        bad.gamma[1][kY10] = 1.0;
        CHECK_THROWS_AS(run_gibbs(data, SpecKind::SI1, {}, m, &bad), ContractError);
    }
    SUBCASE("config contracts") {
        m.kept = 0;
        CHECK_THROWS_AS(run_gibbs(data, SpecKind::LSI, {}, m), ContractError);
    }
}

TEST_CASE("empty data recovers the prior") {
    McmcConfig m;
    m.burn_in = 0;
    m.kept = 10000;
    m.seed = 21;
    const PriorConfig prior{0.5, 4.0, 3.0, 2.0};
    const auto chain = run_gibbs(Dataset{}, SpecKind::LSI, prior, m);
    std::array<std::vector<double>, ParameterVector::kSize> cols;
    for (const auto& t : chain.draws) {
        const auto f = t.flatten();
        for (std::size_t j = 0; j < f.size(); ++j) cols[j].push_back(f[j]);
    }
    for (std::size_t j = 0; j < 27; ++j)
        for (const auto& q : oracle::normal_quantiles(cols[j], 0.5, 4.0)) CHECK_MESSAGE(q.ok(4.0), ParameterVector::names()[j]);
    for (std::size_t j = 27; j < 31; ++j)
        for (const auto& q : oracle::scaled_inv_chi2_quantiles(cols[j], 3.0, 2.0))
            CHECK_MESSAGE(q.ok(4.0), ParameterVector::names()[j]);
}

TEST_CASE("EM warm start") {
    const auto cfg = small_scenario("scenario_lsi.cfg", 3000);
    const auto data = generate(cfg);
    const auto ws = em_warm_start(data, SpecKind::LSI);
    CHECK(ws.log_likelihood == doctest::Approx(log_likelihood(ws.theta, data, SpecKind::LSI)).epsilon(1e-9));
    CHECK(ws.log_likelihood >= log_likelihood(cfg.theta_true, data, SpecKind::LSI) - 1.0);
    const auto si = em_warm_start(data, SpecKind::SI1);
    CHECK(satisfies_si_constraint(si.theta));
    CHECK_THROWS_AS(em_warm_start(data, SpecKind::SI2), ContractError);
    CHECK_THROWS_AS(em_warm_start(Dataset{}, SpecKind::LSI), ContractError);
}
