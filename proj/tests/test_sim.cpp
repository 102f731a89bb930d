#include <doctest.h>

#include <cmath>
#include <limits>

#include "lagflm/sim.hpp"
#include "support.hpp"

using namespace lagflm;
using namespace testsupport;

TEST_CASE("generated datasets obey the design counts") {
    sim::SimConfig cfg;
    cfg.n = 100;
    cfg.seed = 1;
    const auto ds = sim::generate_dataset(cfg);
    REQUIRE(ds.observed.subjects() == 100);
    CHECK(ds.grid.size() == 100);
    CHECK(ds.grid[1] == doctest::Approx(1.0 / 99.0).epsilon(1e-15));
    for (std::size_t i = 0; i < 100; ++i) {
        CHECK(ds.observed.y[i].size() >= 20);
        CHECK(ds.observed.y[i].size() <= 50);
        CHECK(ds.observed.x2[i].size() >= 30);
        CHECK(ds.observed.x2[i].size() <= 50);
        CHECK(ds.observed.has_x1[i] == 1);
        for (double t : ds.observed.y[i].times) CHECK(t >= 0.4 - 1e-12);
        ds.observed.y[i].validate();
        ds.observed.x2[i].validate();
    }
    CHECK(ds.observed.x1.values.cols() == 100);
}

TEST_CASE("infinite SNR reproduces the latent values exactly") {
    sim::SimConfig cfg;
    cfg.n = 12;
    cfg.seed = 5;
    cfg.snr = std::numeric_limits<double>::infinity();
    const auto ds = sim::generate_dataset(cfg);
    for (std::size_t i = 0; i < ds.observed.subjects(); ++i) {
        for (std::size_t j = 0; j < ds.observed.y[i].size(); ++j)
            CHECK(ds.observed.y[i].values[j] == ds.latent_y_at(i, ds.observed.y[i].times[j]));
        for (std::size_t j = 0; j < ds.observed.x2[i].size(); ++j) {
            const double t = ds.observed.x2[i].times[j];
            const double latent = ds.scores(static_cast<Eigen::Index>(i), 2) * std::cos(kTwoPi * t);
            CHECK(ds.observed.x2[i].values[j] == doctest::Approx(latent).epsilon(1e-15));
        }
    }
    CHECK((ds.observed.x1.values - ds.x1_latent).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("latent responses match a high-resolution quadrature oracle") {
    sim::SimConfig cfg;
    cfg.n = 5;
    cfg.seed = 9;
    const auto ds = sim::generate_dataset(cfg);
    for (std::size_t i = 0; i < 5; ++i) {
        Scores sc;
        sc.xi1 = ds.scores(static_cast<Eigen::Index>(i), 0);
        sc.xi2 = ds.scores(static_cast<Eigen::Index>(i), 1);
        sc.zeta = ds.scores(static_cast<Eigen::Index>(i), 2);
        for (std::size_t j = 0; j < ds.y_grid.size(); j += 13) {
            const double want = latent_y(sc, ds.y_grid[j], true, 10000);
            CHECK(std::abs(ds.y_latent(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) -
                           want) < 1e-8);
        }
    }
}

TEST_CASE("identical configs give bitwise-identical datasets") {
    sim::SimConfig cfg;
    cfg.n = 40;
    cfg.seed = 123456789;
    cfg.replication = 3;
    const auto a = sim::generate_dataset(cfg);
    const auto b = sim::generate_dataset(cfg);
    CHECK((a.observed.x1.values - b.observed.x1.values).cwiseAbs().maxCoeff() == 0.0);
    for (std::size_t i = 0; i < a.observed.subjects(); ++i) {
        CHECK(a.observed.y[i].times == b.observed.y[i].times);
        CHECK(a.observed.y[i].values == b.observed.y[i].values);
        CHECK(a.observed.x2[i].times == b.observed.x2[i].times);
        CHECK(a.observed.x2[i].values == b.observed.x2[i].values);
    }
    // and a different replication index changes the draws
    sim::SimConfig other = cfg;
    other.replication = 4;
    const auto c = sim::generate_dataset(other);
    CHECK((a.observed.x1.values - c.observed.x1.values).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("noise calibration hits the configured SNR") {
    sim::SimConfig cfg;
    cfg.n = 200;
    cfg.seed = 2718;
    const auto ds = sim::generate_dataset(cfg);

    double noise_ss = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < ds.observed.subjects(); ++i)
        for (std::size_t j = 0; j < ds.observed.y[i].size(); ++j) {
            const double e = ds.observed.y[i].values[j] - ds.latent_y_at(i, ds.observed.y[i].times[j]);
            noise_ss += e * e;
            ++count;
        }
    const double m2_y = ds.y_latent.array().square().mean();
    const double ratio = (noise_ss / count) / m2_y;
    CHECK(ratio > 0.95 / 20.0);
    CHECK(ratio < 1.05 / 20.0);

    double noise_x1 = (ds.observed.x1.values - ds.x1_latent).array().square().mean();
    const double m2_x1 = ds.x1_latent.array().square().mean();
    CHECK(noise_x1 / m2_x1 > 0.95 / 20.0);
    CHECK(noise_x1 / m2_x1 < 1.05 / 20.0);
}

TEST_CASE("latent dense data recover the identified response functionals") {
    // The design processes span only three random directions per time point,
    // so the basis coefficients are identified only through the response
    // functionals; those must be reproduced essentially exactly by the
    // penalized solve on noiseless data.
    const auto data = common_grid_data(31415, 200);
    const model::LagWindow lags{0.1, 0.4};
    const auto oracle = model::fit_common_grid_oracle(data, lags, lags, {1e-8, 1e-8}, 4, 10, 30);
    const auto b1 = basis::make_bspline_basis(4, 10, lags.as_interval());

    double worst = 0.0;
    for (std::size_t i = 0; i < 200; i += 40) {
        const Eigen::VectorXd x1_row = data.x1.row(static_cast<Eigen::Index>(i));
        const Eigen::VectorXd x2_row = data.x2.row(static_cast<Eigen::Index>(i));
        const std::span<const double> v1(x1_row.data(), static_cast<std::size_t>(x1_row.size()));
        const std::span<const double> v2(x2_row.data(), static_cast<std::size_t>(x2_row.size()));
        for (std::size_t c = 0; c < oracle.times.size(); c += 7) {
            const double t = oracle.times[c];
            double pred = 0.0;
            for (int k = 0; k < b1.size(); ++k) {
                const auto bk = [&](double s) { return b1.eval(s)[k]; };
                pred += oracle.b1(k, static_cast<Eigen::Index>(c)) *
                        basis::quadrature_integrate(
                            [&](double s) { return bk(s) * interp1(data.curve_grid, v1, t - s); },
                            lags.as_interval(), 30);
                pred += oracle.b2(k, static_cast<Eigen::Index>(c)) *
                        basis::quadrature_integrate(
                            [&](double s) { return bk(s) * interp1(data.curve_grid, v2, t - s); },
                            lags.as_interval(), 30);
            }
            worst = std::max(worst,
                             std::abs(pred - data.y(static_cast<Eigen::Index>(i),
                                                    static_cast<Eigen::Index>(c))));
        }
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("table-1 driver smoke run") {
    sim::SimConfig cfg;
    cfg.seed = 7;
    model::FitOptions opts;
    opts.surface_grid_size = 60;
    const std::vector<int> n_list = {30};
    const std::vector<std::pair<double, double>> rho = {{1e-3, 1e-3}, {1e-2, 1e-2}};
    const auto rows = sim::run_table1(cfg, n_list, 2, rho, opts, 2);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].n == 30);
    CHECK(std::isfinite(rows[0].mean_npe));
    CHECK(rows[0].mean_npe > 0.0);
    CHECK(rows[0].se_npe >= 0.0);
    const auto again = sim::run_table1(cfg, n_list, 2, rho, opts, 1);
    CHECK(rows[0].mean_npe == again[0].mean_npe);  // bitwise, any thread budget
}

TEST_CASE("lag experiment with a single candidate always hits") {
    sim::SimConfig cfg;
    cfg.n = 25;
    cfg.seed = 3;
    model::FitOptions opts;
    opts.surface_grid_size = 50;
    const std::vector<double> uppers = {0.4};
    const std::vector<std::pair<double, double>> rho = {{1e-3, 1e-3}};
    const auto res = sim::run_lag_experiment(cfg, uppers, 2, rho, 4, opts, 2);
    CHECK(res.hits == 2);
    const auto again = sim::run_lag_experiment(cfg, uppers, 2, rho, 4, opts, 1);
    CHECK(res.selected_upper == again.selected_upper);
}
