#include <doctest.h>

#include <cmath>
#include <random>

#include "error.hpp"
#include "sensitivity.hpp"

using namespace seqlsi;

namespace {

Chain gamma_chain(bool si, std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, 0.5);
    Chain c;
    c.spec = SpecKind::LSI;
    for (std::size_t i = 0; i < n; ++i) {
        ParameterVector t;
        for (auto& g : t.gamma)
            for (auto& x : g) x = z(rng);
        c.draws.push_back(si ? with_si_constraint(t) : t);
    }
    return c;
}

Dataset cells(std::mt19937_64& rng, std::size_t n, double h_const) {
    std::bernoulli_distribution coin(0.5), treat(h_const);
    std::normal_distribution<double> z;
    Dataset d;
    for (std::size_t i = 0; i < n; ++i) {
        Unit u;
        u.id = static_cast<std::int64_t>(i + 1);
        u.w1 = coin(rng);
        u.y1_obs = coin(rng);
        u.w2 = treat(rng);
        u.y2_obs = 2.0 * u.w1 + 3.0 * u.w2 + u.y1_obs + z(rng);
        d.units.push_back(u);
    }
    return d;
}

}  // namespace

TEST_CASE("equality gaps") {
    SUBCASE("exactly zero under the SI constraint") {
        for (const auto& g : equality_gaps(gamma_chain(true, 200, 1)))
            for (double x : g) CHECK(x == 0.0);
    }
    SUBCASE("draw-wise differences of the assignment probabilities") {
        const auto c = gamma_chain(false, 100, 2);
        const auto gaps = equality_gaps(c);
        const auto& pairs = equality_pairings();
        for (std::size_t k = 0; k < 4; ++k)
            for (std::size_t i = 0; i < c.draws.size(); ++i) {
                const double a = assign_prob_lsi(c.draws[i].gamma, pairs[k].w1, pairs[k].first);
                const double b = assign_prob_lsi(c.draws[i].gamma, pairs[k].w1, pairs[k].second);
                CHECK(gaps[k][i] == a - b);
                CHECK(assign_prob_lsi(c.draws[i].gamma, pairs[k].w1, pairs[k].second) -
                          assign_prob_lsi(c.draws[i].gamma, pairs[k].w1, pairs[k].first) ==
                      -gaps[k][i]);
            }
    }
    SUBCASE("pairings share an observed cell") {
        for (const auto& p : equality_pairings()) {
            CHECK(y1_under(p.first, p.w1) == y1_under(p.second, p.w1));
        }
        CHECK(equality_pairings()[0].label() == "w1=0:00-01");
        CHECK(equality_pairings()[3].label() == "w1=1:01-11");
    }
    SUBCASE("LSI chains only") {
        auto c = gamma_chain(true, 10, 3);
        c.spec = SpecKind::SI1;
        CHECK_THROWS_AS(equality_gaps(c), ContractError);
    }
}

TEST_CASE("sensitivity report") {
    SUBCASE("degenerate chain") {
        Chain c = gamma_chain(false, 1, 4);
        c.draws.assign(40, c.draws[0]);
        for (const auto& r : sensitivity_report(c)) {
            CHECK(r.gap.sd == 0.0);
            CHECK(r.lower == r.upper);
        }
    }
    SUBCASE("interval exclusion flag") {
        Chain c;
        c.spec = SpecKind::LSI;
        std::mt19937_64 rng(5);
        std::normal_distribution<double> z(0.0, 0.05);
        for (int i = 0; i < 1000; ++i) {
            ParameterVector t;
            t.gamma[1][kY11] = 1.0 + z(rng);
            t.gamma[1][kY10Y11] = -2.0 + z(rng);
            t.gamma[1][kY10] = 0.5 + z(rng);
            c.draws.push_back(t);
        }
        const auto rows = sensitivity_report(c, 0.9);
        CHECK(rows[3].excludes_zero);
        CHECK(rows[0].level == 0.9);
        CHECK(rows[0].lower <= rows[0].upper);
        CHECK(rows[3].first.median.has_value());
    }
}

TEST_CASE("IPW estimator") {
    std::mt19937_64 rng(6);
    SUBCASE("saturated weights standardize cell means over the observed Y1 mix") {
        const auto d = cells(rng, 4000, 0.4);
        const auto r = ipw_msm_estimate(d, {0, 1});
        double cellsum[8] = {}, celln[8] = {}, armn[2] = {}, y1n[2][2] = {};
        for (const auto& u : d.units) {
            const int k = cell_index(u.w1, u.y1_obs, u.w2);
            cellsum[k] += u.y2_obs;
            celln[k] += 1;
            armn[u.w1] += 1;
            y1n[u.w1][u.y1_obs] += 1;
        }
        for (int s = 0; s < 4; ++s) {
            const auto seq = TreatmentSequence::from_index(s);
            double m = 0;
            for (int y1 = 0; y1 < 2; ++y1) {
                const int k = cell_index(seq.w1, y1, seq.w2);
                m += y1n[seq.w1][y1] / armn[seq.w1] * cellsum[k] / celln[k];
            }
            REQUIRE(r.sequence_means[s]);
            CHECK(*r.sequence_means[s] == doctest::Approx(m).epsilon(1e-12));
        }
        CHECK(r.ates[0].name == "ATE_11.00");
        CHECK_FALSE(r.ates[0].se);
    }
    SUBCASE("balanced assignment gives the simple mean difference exactly") {
        Dataset d;
        std::int64_t id = 0;
        std::normal_distribution<double> z;
        for (int w1 = 0; w1 < 2; ++w1)
            for (int y1 = 0; y1 < 2; ++y1)
                for (int w2 = 0; w2 < 2; ++w2)
                    for (int i = 0; i < 50; ++i) d.units.push_back(Unit{++id, std::uint8_t(w1), std::uint8_t(y1), std::uint8_t(w2), z(rng), std::nullopt});
        const auto r = ipw_msm_estimate(d, {0, 1});
        double sum[4] = {}, n[4] = {};
        for (const auto& u : d.units) {
            sum[u.sequence().index()] += u.y2_obs;
            n[u.sequence().index()] += 1;
        }
        for (int s = 0; s < 4; ++s) CHECK(*r.sequence_means[s] == doctest::Approx(sum[s] / n[s]).epsilon(1e-12));
        CHECK(*r.ates[0].estimate == doctest::Approx(sum[3] / n[3] - sum[0] / n[0]).epsilon(1e-12));
    }
    SUBCASE("duplicating every unit changes nothing") {
        const auto d = cells(rng, 1500, 0.3);
        Dataset dd = d;
        for (const auto& u : d.units) dd.units.push_back(u);
        const auto a = ipw_msm_estimate(d, {0, 1});
        const auto b = ipw_msm_estimate(dd, {0, 1});
        for (int k = 0; k < 6; ++k) CHECK(*a.ates[k].estimate == doctest::Approx(*b.ates[k].estimate).epsilon(1e-12));
    }
    SUBCASE("bootstrap is seeded") {
        const auto d = cells(rng, 800, 0.5);
        const auto a = ipw_msm_estimate(d, {50, 9});
        const auto b = ipw_msm_estimate(d, {50, 9});
        const auto c = ipw_msm_estimate(d, {50, 10});
        CHECK(*a.ates[2].se == *b.ates[2].se);
        CHECK(*a.ates[2].se != *c.ates[2].se);
        CHECK(a.ates[2].reps_used == 50);
    }
    SUBCASE("empty cell leaves the affected contrasts undefined") {
        Dataset d = cells(rng, 2000, 0.5);
        std::erase_if(d.units, [](const Unit& u) { return u.w1 == 1 && u.y1_obs == 1 && u.w2 == 1; });
        const auto r = ipw_msm_estimate(d, {20, 1});
        REQUIRE(r.empty_cells.size() == 1);
        CHECK(r.empty_cells[0] == cell_index(1, 1, 1));
        CHECK_FALSE(r.sequence_means[3]);
        for (int k = 0; k < 6; ++k) {
            const auto& c = ate_contrasts()[k];
            const bool uses11 = c.treated.index() == 3 || c.reference.index() == 3;
            CHECK(r.ates[k].estimate.has_value() == !uses11);
            if (uses11) CHECK_FALSE(r.ates[k].note.empty());
        }
        CHECK_THROWS_AS(ipw_msm_estimate(Dataset{}, {}), ContractError);
    }
}
