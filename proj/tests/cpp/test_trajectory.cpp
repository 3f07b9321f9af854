#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "survtraj/errors.hpp"
#include "survtraj/generation.hpp"
#include "survtraj/rng.hpp"
#include "survtraj/trajectory.hpp"

using namespace survtraj;

namespace {

// Hand-assembled model with an identity decoder (d_z == feature width) and a
// fixed background, enough to drive the inference path without training.
TrainedModel stub_model(int d, int m, int v) {
    TrainedModel model;
    VaeConfig cfg;
    cfg.input_dim = d;
    cfg.d_z = d;
    cfg.hidden_units = 4;
    cfg.hidden_layers = 1;
    Rng rng(123);
    model.vae = init_vae(cfg, rng);

    model.vae.decoder.layers.clear();
    Linear ident;
    ident.w = Tensor({d, d});
    for (int i = 0; i < d; ++i) ident.w.at(i, i) = 1.0;
    ident.b = Tensor({d});
    model.vae.decoder.layers.push_back(ident);

    for (int i = 0; i < d; ++i) {
        model.schema.features.push_back({"x" + std::to_string(i), FeatureKind::continuous, {}});
    }
    model.schema.mean.assign(static_cast<size_t>(d), 0.0);
    model.schema.stddev.assign(static_cast<size_t>(d), 1.0);
    model.schema.fitted = true;

    const int nb = 6;
    model.background.embeddings = Tensor({nb, d});
    model.background.features = Tensor({nb, d});
    Rng brng(5);
    for (int i = 0; i < nb; ++i) {
        for (int k = 0; k < d; ++k) {
            model.background.embeddings.at(i, k) = brng.normal();
            model.background.features.at(i, k) = brng.normal();
        }
        model.background.times.push_back(1.0 + i);
        model.background.events.push_back(1);
    }
    model.t_min = 1.0;
    model.t_max = nb;
    model.settings.train.m = m;
    model.settings.train.v = v;
    model.settings.train.d_z = d;
    model.censor.constant = true;
    model.censor.constant_p = 1.0;
    return model;
}

}  // namespace

TEST_CASE("time_grid arithmetic progressions") {
    auto g = time_grid(0.0, 10.0, 5);
    REQUIRE(g.points.size() == 5);
    const std::vector<double> want{2.0, 4.0, 6.0, 8.0, 10.0};
    for (size_t i = 0; i < 5; ++i) CHECK(g.points[i] == doctest::Approx(want[i]).epsilon(1e-12));

    g = time_grid(0.0, 10.0, 1);
    REQUIRE(g.points.size() == 1);
    CHECK(g.points[0] == 10.0);

    g = time_grid(3.0, 7.0, 4);
    const std::vector<double> want2{4.0, 5.0, 6.0, 7.0};
    for (size_t i = 0; i < 4; ++i) CHECK(g.points[i] == doctest::Approx(want2[i]).epsilon(1e-12));

    CHECK_THROWS_AS((void)time_grid(5.0, 5.0, 3), ContractError);
    CHECK_THROWS_AS((void)time_grid(0.0, 1.0, 0), ContractError);
}

TEST_CASE("prior_density examples") {
    CHECK(prior_density({1.0, 2.0}, {1.0, 2.0}, {0.5, 2.0}) == doctest::Approx(1.0));
    CHECK(prior_density({1.0}, {0.0}, {1.0}) == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
    // sigma -> infinity drives the density to 1
    CHECK(prior_density({4.0}, {0.0}, {1e9}) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK_THROWS_AS((void)prior_density({1.0}, {0.0}, {0.0}), ContractError);
}

TEST_CASE("prior_density is invariant under coordinate permutation") {
    const double a = prior_density({1.0, -2.0, 0.5}, {0.0, 1.0, 2.0}, {1.0, 2.0, 0.5});
    const double b = prior_density({0.5, 1.0, -2.0}, {2.0, 0.0, 1.0}, {0.5, 1.0, 2.0});
    CHECK(a == doctest::Approx(b).epsilon(1e-15));
}

TEST_CASE("smoothed_density examples") {
    DiscreteEventDistribution single;
    single.times = {3.0};
    single.masses = {0.42};
    single.residual = 0.58;
    CHECK(smoothed_density(0.1, single, 2.0) == doctest::Approx(0.42));
    CHECK(smoothed_density(9.0, single, 2.0) == doctest::Approx(0.42));

    DiscreteEventDistribution d;
    d.times = {1.0, 2.0, 3.0};
    d.masses = {0.2, 0.3, 0.5};
    d.residual = 0.0;
    // eta = 0: uniform beta, mean of the masses
    CHECK(smoothed_density(1.7, d, 0.0) == doctest::Approx((0.2 + 0.3 + 0.5) / 3.0).epsilon(1e-12));
    // large eta at a support point picks out its mass
    CHECK(smoothed_density(2.0, d, 500.0) == doctest::Approx(0.3).epsilon(1e-9));
}

TEST_CASE("smoothed_density is continuous in t") {
    DiscreteEventDistribution d;
    d.times = {1.0, 4.0, 5.5};
    d.masses = {0.25, 0.25, 0.4};
    d.residual = 0.1;
    for (double t : {0.5, 1.0, 2.3, 4.0, 7.0}) {
        const double here = smoothed_density(t, d, 3.0);
        const double there = smoothed_density(t + 1e-6, d, 3.0);
        CHECK(std::abs(here - there) < 1e-5);
    }
}

TEST_CASE("trajectory_weights examples") {
    auto a = trajectory_weights({0.4}, {1.0});
    REQUIRE(a.size() == 1);
    CHECK(a[0] == 1.0);

    // coincident embeddings: equal densities and priors
    a = trajectory_weights({0.3, 0.3, 0.3}, {0.8, 0.8, 0.8});
    for (double x : a) CHECK(x == doctest::Approx(1.0 / 3.0));

    a = trajectory_weights({0.2, 0.3}, {0.5, 0.5});
    CHECK(a[0] == doctest::Approx(0.4));
    CHECK(a[1] == doctest::Approx(0.6));

    // every numerator underflows -> uniform fallback
    a = trajectory_weights({0.0, 0.0}, {0.0, 0.0});
    CHECK(a[0] == doctest::Approx(0.5));
    CHECK(a[1] == doctest::Approx(0.5));
}

TEST_CASE("normalize_rows_safe: dead rows go uniform, live rows normalize") {
    Tensor num({2, 3});
    num.at(0, 0) = 1.0;
    num.at(0, 1) = 3.0;
    num.at(0, 2) = 0.0;
    // row 1 all zero
    Value alpha = normalize_rows_safe(Value::constant(num));
    CHECK(alpha.val().at(0, 0) == doctest::Approx(0.25));
    CHECK(alpha.val().at(0, 1) == doctest::Approx(0.75));
    CHECK(alpha.val().at(1, 0) == doctest::Approx(1.0 / 3.0));
    CHECK(alpha.val().at(1, 1) == doctest::Approx(1.0 / 3.0));
    CHECK(alpha.val().at(1, 2) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("embedding trajectory stays in the convex hull of the samples") {
    TrainedModel model = stub_model(3, 16, 12);
    Rng rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> x{rng.normal(), rng.normal(), rng.normal()};
        Rng traj_rng = rng.split(static_cast<uint64_t>(trial));
        const Trajectory traj = compute_trajectory(model, x, traj_rng);

        // recover the bundle the trajectory sampled
        Rng replay = rng.split(static_cast<uint64_t>(trial));
        const auto x_std = standardize_row(x, model.schema);
        const auto [mu, sigma] = encode(model.vae, x_std);
        const LatentBundle bundle = sample_embeddings(mu, sigma, 16, replay);

        for (int k = 0; k < traj.weights.rows(); ++k) {
            double rowsum = 0.0;
            for (int j = 0; j < traj.weights.cols(); ++j) {
                CHECK(traj.weights.at(k, j) >= 0.0);
                rowsum += traj.weights.at(k, j);
            }
            CHECK(std::abs(rowsum - 1.0) < 1e-9);
            for (int dcol = 0; dcol < 3; ++dcol) {
                double lo = bundle.z.at(0, dcol), hi = lo;
                for (int s = 1; s < 16; ++s) {
                    lo = std::min(lo, bundle.z.at(s, dcol));
                    hi = std::max(hi, bundle.z.at(s, dcol));
                }
                CHECK(traj.latent_points.at(k, dcol) >= lo - 1e-9);
                CHECK(traj.latent_points.at(k, dcol) <= hi + 1e-9);
            }
        }
    }
}

TEST_CASE("identity decoder makes feature points equal latent points") {
    TrainedModel model = stub_model(3, 8, 6);
    Rng rng(42);
    const Trajectory traj = compute_trajectory(model, {0.2, -0.4, 1.0}, rng);
    for (int k = 0; k < traj.latent_points.rows(); ++k) {
        for (int c = 0; c < 3; ++c) {
            CHECK(traj.feature_points.at(k, c) ==
                  doctest::Approx(traj.latent_points.at(k, c)).epsilon(1e-12));
        }
    }
}

TEST_CASE("trajectory emission is deterministic for a frozen bundle") {
    TrainedModel model = stub_model(2, 8, 10);
    Rng a(77), b(77);
    const Trajectory ta = compute_trajectory(model, {0.5, 0.5}, a);
    const Trajectory tb = compute_trajectory(model, {0.5, 0.5}, b);
    for (size_t i = 0; i < ta.latent_points.size(); ++i) {
        CHECK(ta.latent_points[i] == tb.latent_points[i]);
    }
    for (size_t i = 0; i < ta.feature_points.size(); ++i) {
        CHECK(ta.feature_points[i] == tb.feature_points[i]);
    }
}

TEST_CASE("single latent sample gives a constant trajectory") {
    TrainedModel model = stub_model(2, 1, 7);
    Rng rng(3);
    const Trajectory traj = compute_trajectory(model, {1.0, -1.0}, rng);
    for (int k = 1; k < traj.latent_points.rows(); ++k) {
        for (int c = 0; c < 2; ++c) {
            CHECK(traj.latent_points.at(k, c) ==
                  doctest::Approx(traj.latent_points.at(0, c)).epsilon(1e-12));
        }
    }
}
