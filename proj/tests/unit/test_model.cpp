#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "error.hpp"
#include "model.hpp"
#include "normal.hpp"
#include "oracles.hpp"

using namespace seqlsi;

namespace {

ParameterVector random_theta(std::mt19937_64& rng, bool si) {
    std::normal_distribution<double> z(0.0, 1.0);
    std::uniform_real_distribution<double> v(0.3, 3.0);
    ParameterVector t;
    for (auto& a : t.alpha) a = z(rng);
    for (auto& g : t.gamma)
        for (auto& c : g) c = z(rng);
    for (auto& b : t.beta)
        for (auto& c : b) c = 3.0 * z(rng);
    for (auto& s : t.sigma2) s = v(rng);
    return si ? with_si_constraint(t) : t;
}

Dataset noise_data(std::mt19937_64& rng, std::size_t n) {
    std::bernoulli_distribution coin(0.5);
    std::normal_distribution<double> z(0.0, 3.0);
    Dataset d;
    for (std::size_t i = 0; i < n; ++i) {
        Unit u;
        u.id = static_cast<std::int64_t>(i + 1);
        u.w1 = coin(rng);
        u.y1_obs = coin(rng);
        u.w2 = coin(rng);
        u.y2_obs = z(rng);
        d.units.push_back(u);
    }
    return d;
}

}  // namespace

TEST_CASE("normal cdf matches a long-double erfc oracle on |x| <= 8") {
    for (double x = -8.0; x <= 8.0; x += 0.03125) {
        const double ref = double(oracle::phi(x));
        CHECK(std::abs(norm_cdf(x) - ref) <= 1e-14 * ref);
    }
    CHECK(norm_sf(3.0) == doctest::Approx(double(oracle::phi(-3.0))).epsilon(1e-14));
    CHECK(norm_quantile(norm_cdf(1.2345)) == doctest::Approx(1.2345).epsilon(1e-12));
}

TEST_CASE("strata_probs") {
    SUBCASE("zero intercepts halve the mass at each step") {
        const std::array<double, 3> a{0, 0, 0};
        const auto pi = strata_probs(a);
        CHECK(pi[0] == 0.25);
        CHECK(pi[1] == 0.125);
        CHECK(pi[2] == 0.125);
        CHECK(pi[3] == 0.5);
    }
    SUBCASE("worked example") {
        const std::array<double, 3> a{0.5, 0.2, -0.3};
        const auto pi = strata_probs(a);
        const auto ref = oracle::strata(a);
        for (int g = 0; g < 4; ++g) CHECK(pi[g] == doctest::Approx(ref[g]).epsilon(1e-13));
        CHECK(pi[0] == doctest::Approx(0.2909).epsilon(2e-4));
        CHECK(pi[1] == doctest::Approx(0.1531).epsilon(2e-4));
        CHECK(pi[2] == doctest::Approx(0.2475).epsilon(2e-4));
        CHECK(pi[3] == doctest::Approx(0.3085).epsilon(2e-4));
    }
    SUBCASE("large alpha_11 empties S11") {
        const std::array<double, 3> a{40.0, 0.3, -0.7};
        const auto pi = strata_probs(a);
        CHECK(pi[3] < 1e-300);
        CHECK(pi[0] == doctest::Approx(1.0 - double(oracle::phi(0.3))));
    }
    SUBCASE("sums to one") {
        std::mt19937_64 rng(7);
        std::normal_distribution<double> z(0.0, 2.0);
        for (int i = 0; i < 10000; ++i) {
            const std::array<double, 3> a{z(rng), z(rng), z(rng)};
            const auto pi = strata_probs(a);
            CHECK(std::abs(pi[0] + pi[1] + pi[2] + pi[3] - 1.0) <= 1e-12);
        }
    }
    SUBCASE("non-finite input") {
        const std::array<double, 3> a{0.0, std::numeric_limits<double>::quiet_NaN(), 0.0};
        CHECK_THROWS_AS(strata_probs(a), DomainError);
    }
}

TEST_CASE("assignment probabilities") {
    std::array<std::array<double, 4>, 2> gamma{};
    SUBCASE("zero gammas") {
        for (int w1 = 0; w1 < 2; ++w1)
            for (auto g : kAllStrata) CHECK(assign_prob_lsi(gamma, w1, g) == 0.5);
        CHECK(assign_prob_si(gamma, 1, 0) == 0.5);
        CHECK(assign_prob_si(gamma, 1, 1) == 0.5);
    }
    SUBCASE("worked example, w1 = 0") {
        gamma[0] = {-1.5, 0.4, 0.6, -0.2};
        CHECK(assign_prob_lsi(gamma, 0, Stratum::S00) == doctest::Approx(0.0668).epsilon(1e-3));
        CHECK(assign_prob_lsi(gamma, 0, Stratum::S10) == doctest::Approx(0.1357).epsilon(1e-3));
        CHECK(assign_prob_lsi(gamma, 0, Stratum::S01) == doctest::Approx(0.1841).epsilon(1e-3));
        CHECK(assign_prob_lsi(gamma, 0, Stratum::S11) == doctest::Approx(0.2420).epsilon(1e-3));
        CHECK(assign_prob_lsi(gamma, 0, Stratum::S11) == doctest::Approx(double(oracle::phi(-0.7))).epsilon(1e-14));
        CHECK(assign_prob_si(gamma, 0, 1) == doctest::Approx(double(oracle::phi(-1.1))).epsilon(1e-14));
    }
    SUBCASE("SI constraint equalizes each observed pair, and SI agrees with LSI") {
        std::mt19937_64 rng(3);
        for (int rep = 0; rep < 100; ++rep) {
            const auto t = with_si_constraint([&] {
                std::normal_distribution<double> z;
                ParameterVector p;
                for (auto& g : p.gamma)
                    for (auto& c : g) c = z(rng);
                return p;
            }());
            REQUIRE(satisfies_si_constraint(t));
            for (int w1 = 0; w1 < 2; ++w1)
                for (int y1 = 0; y1 < 2; ++y1) {
                    const auto [a, b] = latent_pair(w1, y1);
                    const double ha = assign_prob_lsi(t.gamma, w1, a);
                    CHECK(ha == assign_prob_lsi(t.gamma, w1, b));
                    CHECK(ha == assign_prob_si(t.gamma, w1, y1));
                }
        }
    }
}

TEST_CASE("outcome_mean") {
    CHECK(outcome_mean({10, 2, 3, 1}, Stratum::S11) == 16.0);
    CHECK(outcome_mean({10, 2, 3, 1}, Stratum::S00) == 10.0);
    CHECK(outcome_mean({10, 2, 3, 1}, Stratum::S10) == 12.0);
    CHECK(outcome_mean({10, 2, 3, 1}, Stratum::S01) == 13.0);
    for (auto g : kAllStrata) CHECK(outcome_mean({-4, 0, 0, 0}, g) == -4.0);
}

TEST_CASE("latent_pair follows the observed-cell classification") {
    CHECK(latent_pair(0, 0) == std::pair{Stratum::S00, Stratum::S01});
    CHECK(latent_pair(0, 1) == std::pair{Stratum::S10, Stratum::S11});
    CHECK(latent_pair(1, 0) == std::pair{Stratum::S00, Stratum::S10});
    CHECK(latent_pair(1, 1) == std::pair{Stratum::S01, Stratum::S11});
    for (int w1 = 0; w1 < 2; ++w1)
        for (int y1 = 0; y1 < 2; ++y1) {
            const auto [a, b] = latent_pair(w1, y1);
            CHECK(y1_under(a, w1) == y1);
            CHECK(y1_under(b, w1) == y1);
        }
}

TEST_CASE("ATE functionals") {
    const TreatmentSequence s00{0, 0}, s01{0, 1}, s10{1, 0}, s11{1, 1};
    SUBCASE("uniform strata, intercept-only outcomes") {
        ParameterVector t;
        t.alpha = {norm_quantile(0.75), norm_quantile(2.0 / 3.0), 0.0};
        const auto pi = strata_probs(t.alpha);
        for (double p : pi) CHECK(p == doctest::Approx(0.25).epsilon(1e-12));
        t.beta[s11.index()] = {10, 0, 0, 0};
        t.beta[s00.index()] = {4, 0, 0, 0};
        CHECK(ate_from_params(t, s11, s00, SpecKind::LSI) == doctest::Approx(6.0).epsilon(1e-12));
    }
    SUBCASE("identical blocks and antisymmetry") {
        std::mt19937_64 rng(11);
        for (int rep = 0; rep < 50; ++rep) {
            auto t = random_theta(rng, false);
            CHECK(ate_from_params(t, s01, s10, SpecKind::LSI) == -ate_from_params(t, s10, s01, SpecKind::LSI));
            t.beta[s01.index()] = t.beta[s10.index()];
            CHECK(ate_from_params(t, s01, s10, SpecKind::LSI) == 0.0);
        }
    }
    SUBCASE("closed form matches brute-force simulation") {
        std::mt19937_64 rng(5);
        const auto t = random_theta(rng, false);
        oracle::Theta o;
        o.alpha = t.alpha;
        o.beta = t.beta;
        o.sigma2 = t.sigma2;
        for (const auto& c : ate_contrasts()) {
            const auto mc = oracle::mc_ate(o, c.treated.index(), c.reference.index(), 200000, 99);
            CHECK(std::abs(ate_from_params(t, c.treated, c.reference, SpecKind::LSI) - mc.mean) <= 3.0 * mc.se);
        }
    }
    SUBCASE("SI-2 uses the observed-Y1 probit") {
        ParameterVector t;
        t.alpha = {0.3, -0.4, 0.0};
        t.beta[s11.index()] = {5, 0, 2, 0};  // slot Y1(1) for w1 = 1
        t.beta[s00.index()] = {1, 3, 0, 0};  // slot Y1(0) for w1 = 0
        const double e11 = 5 + 2 * double(oracle::phi(-0.4));
        const double e00 = 1 + 3 * double(oracle::phi(0.3));
        CHECK(ate_from_params(t, s11, s00, SpecKind::SI2) == doctest::Approx(e11 - e00).epsilon(1e-13));
    }
    SUBCASE("spec violations") {
        ParameterVector t;
        t.gamma[1][kY10] = 0.5;
        CHECK_THROWS_AS(ate_from_params(t, s11, s00, SpecKind::SI1), ContractError);
        t = ParameterVector{};
        t.sigma2[2] = 0.0;
        CHECK_THROWS_AS(validate(t, SpecKind::LSI), DomainError);
    }
    CHECK(ate_contrasts()[0].name() == "ATE_11.00");
    CHECK(ate_contrasts()[4].name() == "ATE_01.10");
}

TEST_CASE("log likelihood") {
    SUBCASE("single-unit mixture arithmetic") {
        ParameterVector t;  // alpha = 0, gamma = 0, beta = 0, sigma2 = 1
        Dataset d;
        d.units.push_back(Unit{1, 0, 0, 0, 0.7, std::nullopt});
        const double c = std::exp(norm_logpdf(0.7, 0.0, 1.0));
        CHECK(log_likelihood(t, d, SpecKind::LSI) == doctest::Approx(std::log(0.1875 * c)).epsilon(1e-13));
    }
    SUBCASE("SI-1 equals its marginalized grouping") {
        std::mt19937_64 rng(17);
        for (int rep = 0; rep < 25; ++rep) {
            const auto t = random_theta(rng, true);
            const auto d = noise_data(rng, 200);
            CHECK(std::abs(log_likelihood(t, d, SpecKind::SI1) - log_likelihood_si_marginalized(t, d)) <= 1e-10);
        }
    }
    SUBCASE("LSI and SI-1 coincide under the SI constraint") {
        std::mt19937_64 rng(23);
        const auto t = random_theta(rng, true);
        const auto d = noise_data(rng, 300);
        CHECK(log_likelihood(t, d, SpecKind::LSI) == log_likelihood(t, d, SpecKind::SI1));
    }
    SUBCASE("replicated units add up") {
        std::mt19937_64 rng(29);
        const auto t = random_theta(rng, false);
        const auto one = noise_data(rng, 1);
        Dataset many;
        for (int i = 0; i < 40; ++i) many.units.push_back(one.units[0]);
        CHECK(log_likelihood(t, many, SpecKind::LSI) ==
              doctest::Approx(40.0 * log_likelihood(t, one, SpecKind::LSI)).epsilon(1e-12));
    }
    SUBCASE("mixture terms survive extreme intercept shifts") {
        std::mt19937_64 rng(31);
        auto t = random_theta(rng, false);
        const auto d = noise_data(rng, 100);
        for (double shift : {-500.0, 500.0}) {
            auto s = t;
            for (auto& b : s.beta) b[0] += shift;
            CHECK(std::isfinite(log_likelihood(s, d, SpecKind::LSI)));
            CHECK(std::isfinite(log_likelihood(with_si_constraint(s), d, SpecKind::SI1)));
        }
    }
    SUBCASE("assignment probabilities far in the tail stay in log space") {
        ParameterVector t;
        t.gamma[0][kIntercept] = -60.0;
        Dataset d;
        d.units.push_back(Unit{1, 0, 0, 1, 0.0, std::nullopt});
        const double ll = log_likelihood(t, d, SpecKind::LSI);
        CHECK(std::isfinite(ll));
        CHECK(ll == doctest::Approx(double(std::log(oracle::phi(-60.0L))) + std::log(0.375) +
                                    norm_logpdf(0.0, 0.0, 1.0)).epsilon(1e-10));
    }
}

TEST_CASE("parameter vector flattening") {
    std::mt19937_64 rng(37);
    const auto t = random_theta(rng, false);
    const auto flat = t.flatten();
    CHECK(ParameterVector::unflatten(flat) == t);
    CHECK(ParameterVector::names()[0] == "alpha_11");
    CHECK(ParameterVector::names().size() == 31);
    const auto free_si2 = free_parameters(SpecKind::SI2);
    const auto free_lsi = free_parameters(SpecKind::LSI);
    CHECK(std::count(free_lsi.begin(), free_lsi.end(), true) == 31);
    CHECK(std::count(free_si2.begin(), free_si2.end(), true) < 31);
}
