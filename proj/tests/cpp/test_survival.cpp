#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "survtraj/beran.hpp"
#include "survtraj/errors.hpp"
#include "survtraj/rng.hpp"
#include "survtraj/survival.hpp"

using namespace survtraj;

namespace {

SurvivalDataset make_ds(const std::vector<std::pair<double, int>>& rows) {
    SurvivalDataset ds;
    for (const auto& [t, e] : rows) ds.records.push_back({{}, t, e});
    return ds;
}

}  // namespace

TEST_CASE("kaplan_meier single event") {
    const auto sf = kaplan_meier(make_ds({{5.0, 1}}));
    REQUIRE(sf.times.size() == 1);
    CHECK(sf.times[0] == 5.0);
    CHECK(sf.values[0] == doctest::Approx(0.0));
    CHECK(sf.at(4.9) == 1.0);
    CHECK(sf.at(5.0) == doctest::Approx(0.0));
}

TEST_CASE("kaplan_meier hand case with censoring") {
    const auto sf = kaplan_meier(make_ds({{1.0, 1}, {2.0, 0}, {3.0, 1}}));
    REQUIRE(sf.times.size() == 3);
    CHECK(sf.at(0.5) == 1.0);
    CHECK(sf.at(1.5) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(sf.at(2.5) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(sf.at(3.0) == doctest::Approx(0.0).epsilon(1e-12));
    sf.validate();
}

TEST_CASE("kaplan_meier with only censored records stays at 1") {
    const auto sf = kaplan_meier(make_ds({{1.0, 0}, {2.0, 0}, {3.0, 0}}));
    for (double v : sf.values) CHECK(v == 1.0);
}

TEST_CASE("kaplan_meier rejects an empty dataset") {
    CHECK_THROWS_AS((void)kaplan_meier(SurvivalDataset{}), ContractError);
}

TEST_CASE("km_density hand cases") {
    const auto d1 = km_density(make_ds({{5.0, 1}}));
    CHECK(d1.masses[0] == doctest::Approx(1.0));
    CHECK(d1.residual == doctest::Approx(0.0));

    const auto d2 = km_density(make_ds({{1.0, 1}, {2.0, 0}, {3.0, 1}}));
    CHECK(d2.masses[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(d2.masses[1] == doctest::Approx(0.0));
    CHECK(d2.masses[2] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    d2.validate();

    const auto d3 = km_density(make_ds({{1.0, 0}, {2.0, 0}}));
    CHECK(d3.masses[0] == 0.0);
    CHECK(d3.masses[1] == 0.0);
    CHECK(d3.residual == doctest::Approx(1.0));
}

TEST_CASE("sf_to_density differences and round trip") {
    StepSurvivalFunction sf;
    sf.times = {1.0, 2.0};
    sf.values = {0.6, 0.2};
    const auto d = sf_to_density(sf);
    CHECK(d.masses[0] == doctest::Approx(0.4));
    CHECK(d.masses[1] == doctest::Approx(0.4));
    CHECK(d.residual == doctest::Approx(0.2));

    // cumulative re-summation recovers the SF exactly
    double cum = 1.0;
    for (size_t i = 0; i < d.masses.size(); ++i) {
        cum -= d.masses[i];
        CHECK(cum == doctest::Approx(sf.values[i]).epsilon(1e-9));
    }
}

TEST_CASE("sf_to_density of the constant-1 SF is all residual") {
    StepSurvivalFunction sf;
    sf.times = {1.0, 4.0};
    sf.values = {1.0, 1.0};
    const auto d = sf_to_density(sf);
    CHECK(d.masses[0] == 0.0);
    CHECK(d.masses[1] == 0.0);
    CHECK(d.residual == 1.0);
}

TEST_CASE("expected_event_time examples") {
    StepSurvivalFunction sf;
    sf.times = {2.0, 4.0};
    sf.values = {0.5, 0.0};
    CHECK(expected_event_time(sf) == doctest::Approx(3.0));

    StepSurvivalFunction drop;
    drop.times = {5.0};
    drop.values = {0.0};
    CHECK(expected_event_time(drop) == doctest::Approx(5.0));

    StepSurvivalFunction flat;
    flat.times = {1.0, 2.0, 7.0};
    flat.values = {1.0, 1.0, 1.0};
    CHECK(expected_event_time(flat) == doctest::Approx(7.0));
}

TEST_CASE("gumbel_sample_time degenerate and deterministic") {
    DiscreteEventDistribution d;
    d.times = {1.0, 2.0, 3.0};
    d.masses = {1.0, 0.0, 0.0};
    d.residual = 0.0;
    Rng rng(3);
    for (int i = 0; i < 50; ++i) CHECK(gumbel_sample_time(d, rng) == 1.0);

    d.masses = {0.3, 0.3, 0.2};
    d.residual = 0.2;
    Rng a(99), b(99);
    for (int i = 0; i < 200; ++i) CHECK(gumbel_sample_time(d, a) == gumbel_sample_time(d, b));

    DiscreteEventDistribution dead;
    dead.times = {1.0};
    dead.masses = {0.0};
    dead.residual = 0.0;
    Rng r2(1);
    CHECK_THROWS_AS((void)gumbel_sample_time(dead, r2), ContractError);
}

TEST_CASE("gumbel_sample_time matches the masses at 200k draws") {
    DiscreteEventDistribution d;
    d.times = {1.0, 2.0};
    d.masses = {0.5, 0.5};
    d.residual = 0.0;
    Rng rng(17);
    const int n = 200000;
    int ones = 0;
    for (int i = 0; i < n; ++i) ones += gumbel_sample_time(d, rng) == 1.0 ? 1 : 0;
    const double f = static_cast<double>(ones) / n;
    CHECK(f == doctest::Approx(0.5).epsilon(0.01));
    CHECK(std::abs(f - 0.5) < 0.005);
}

TEST_CASE("residual mass maps to the horizon time") {
    DiscreteEventDistribution d;
    d.times = {1.0, 2.0};
    d.masses = {0.0, 0.0};
    d.residual = 1.0;
    Rng rng(5);
    for (int i = 0; i < 20; ++i) CHECK(gumbel_sample_time(d, rng) == 2.0);
}

TEST_CASE("kernel_weights examples") {
    // equidistant background points
    auto w = kernel_weights({0.0}, {{1.0}, {-1.0}}, 1.0);
    CHECK(w[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(w[1] == doctest::Approx(0.5).epsilon(1e-12));

    // identical background points: uniform regardless of tau
    w = kernel_weights({3.0}, {{7.0}, {7.0}, {7.0}}, 0.01);
    for (double x : w) CHECK(x == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

    // direct scalar softmax evaluation
    w = kernel_weights({0.0}, {{0.0}, {1.0}}, 1.0);
    const double e = std::exp(-1.0);
    CHECK(w[0] == doctest::Approx(1.0 / (1.0 + e)).epsilon(1e-12));
    CHECK(w[1] == doctest::Approx(e / (1.0 + e)).epsilon(1e-12));

    CHECK_THROWS_AS((void)kernel_weights({0.0}, {{1.0}}, 0.0), ContractError);
    CHECK_THROWS_AS((void)kernel_weights({0.0}, {}, 1.0), ContractError);
}

TEST_CASE("beran_sf single item and weight-1 step") {
    const StepSurvivalFunction sf = beran_sf({0.4}, {{{0.0}, 4.0, 1}}, 1.0);
    REQUIRE(sf.times.size() == 1);
    CHECK(sf.times[0] == 4.0);
    CHECK(sf.values[0] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("beran_sf approaches the nearest item's step at small tau") {
    std::vector<BeranItem> bg = {{{0.0, 0.0}, 2.0, 1}, {{5.0, 5.0}, 9.0, 1}};
    const StepSurvivalFunction sf = beran_sf({0.1, 0.1}, bg, 0.05);
    CHECK(sf.at(1.9) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(sf.at(2.0) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("beran with identical embeddings reduces to Kaplan-Meier") {
    Rng rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 1 + rng.uniform_int(30);
        SurvivalDataset ds;
        std::vector<BeranItem> bg;
        for (int i = 0; i < n; ++i) {
            const double t = 0.25 * (1 + rng.uniform_int(40));
            const int e = rng.uniform() < 0.3 ? 0 : 1;
            ds.records.push_back({{}, t, e});
            bg.push_back({{0.7, -0.2}, t, e});  // identical embeddings -> uniform weights
        }
        const auto km = kaplan_meier(ds);
        const auto beran = beran_sf({0.3, 1.4}, bg, 0.5);
        REQUIRE(km.times.size() == beran.times.size());
        for (size_t i = 0; i < km.times.size(); ++i) {
            CHECK(km.times[i] == beran.times[i]);
            CHECK(std::abs(km.values[i] - beran.values[i]) < 1e-12);
        }
    }
}

TEST_CASE("beran curves are monotone in [0,1] for random inputs") {
    Rng rng(77);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 2 + rng.uniform_int(20);
        std::vector<BeranItem> bg;
        for (int i = 0; i < n; ++i) {
            bg.push_back({{rng.normal(), rng.normal()}, rng.uniform(0.1, 9.0),
                          rng.uniform() < 0.35 ? 0 : 1});
        }
        const auto sf = beran_sf({rng.normal(), rng.normal()}, bg, rng.uniform(0.05, 3.0));
        sf.validate();
    }
}

TEST_CASE("c_index_hard examples") {
    // perfectly concordant
    auto c = c_index_hard({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}, {1, 1, 1});
    REQUIRE(c.has_value());
    CHECK(*c == doctest::Approx(1.0));

    // fully reversed
    c = c_index_hard({3.0, 2.0, 1.0}, {1.0, 2.0, 3.0}, {1, 1, 1});
    REQUIRE(c.has_value());
    CHECK(*c == doctest::Approx(0.0));

    // hand-enumerated: with delta_2 = 0 only (1,2) and (1,3) are admissible
    // and both rank correctly
    c = c_index_hard({1.0, 3.0, 2.0}, {1.0, 2.0, 3.0}, {1, 0, 1});
    REQUIRE(c.has_value());
    CHECK(*c == doctest::Approx(1.0));

    // all three pairs admissible, (2,3) discordant
    c = c_index_hard({1.0, 3.0, 2.0}, {1.0, 2.0, 3.0}, {1, 1, 1});
    REQUIRE(c.has_value());
    CHECK(*c == doctest::Approx(2.0 / 3.0));

    // no admissible pair -> undefined, not a number
    c = c_index_hard({1.0, 2.0}, {5.0, 5.0}, {1, 1});
    CHECK(!c.has_value());
}

TEST_CASE("c_index_hard is invariant under strictly increasing transforms") {
    Rng rng(13);
    std::vector<double> pred(20), t(20);
    std::vector<int> e(20);
    for (size_t i = 0; i < 20; ++i) {
        pred[i] = rng.normal();
        t[i] = rng.uniform(0.1, 10.0);
        e[i] = rng.uniform() < 0.5 ? 0 : 1;
    }
    e[0] = 1;
    const auto base = c_index_hard(pred, t, e);
    std::vector<double> warped(20);
    for (size_t i = 0; i < 20; ++i) warped[i] = std::exp(3.0 * pred[i]) + 5.0;
    const auto after = c_index_hard(warped, t, e);
    REQUIRE(base.has_value());
    REQUIRE(after.has_value());
    CHECK(*base == *after);
}

TEST_CASE("tie-break puts events before censorings at equal times") {
    // With a censored record tied at t=2, the event at t=2 must still drop
    // the curve computed on the risk set including the censored one.
    const auto sf = kaplan_meier(make_ds({{2.0, 0}, {2.0, 1}, {1.0, 1}}));
    // sorted: (1,e), (2,e), (2,c); factors 2/3 then 1/2 -> S(2) = 1/3
    CHECK(sf.at(1.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(sf.at(2.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}
