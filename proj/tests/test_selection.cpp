#include <doctest.h>

#include <cmath>
#include <set>

#include "lagflm/selection.hpp"
#include "lagflm/sim.hpp"
#include "support.hpp"

using namespace lagflm;
using model::LagWindow;

namespace {

model::FitOptions small_opts() {
    model::FitOptions opts;
    opts.threads = 2;
    opts.surface_grid_size = 50;
    opts.eval_grid_size = 40;
    return opts;
}

}  // namespace

TEST_CASE("npe basics") {
    SUBCASE("perfect predictions score zero") {
        const std::vector<double> v = {1.0, -2.0, 3.0};
        const auto res = selection::npe(v, v);
        CHECK(res.value == 0.0);
        CHECK(res.excluded == 0);
    }
    SUBCASE("hand-evaluated example") {
        const std::vector<double> obs = {2.0, 4.0};
        const std::vector<double> pred = {1.0, 5.0};
        CHECK(selection::npe(pred, obs).value == doctest::Approx(0.375).epsilon(1e-15));
    }
    SUBCASE("near-zero observations are excluded and reported") {
        const std::vector<double> obs = {0.0, 1.0};
        const std::vector<double> pred = {1.0, 1.0};
        const auto res = selection::npe(pred, obs);
        CHECK(res.value == 0.0);
        CHECK(res.excluded == 1);
    }
    SUBCASE("all pairs excluded is an error") {
        const std::vector<double> obs = {0.0, 1e-9};
        const std::vector<double> pred = {1.0, 1.0};
        CHECK_THROWS_AS(selection::npe(pred, obs), UndefinedNpeError);
    }
    SUBCASE("nonnegative on random inputs") {
        RngStream rng(4, 0, 0, 0);
        for (int rep = 0; rep < 50; ++rep) {
            std::vector<double> obs(10), pred(10);
            for (int j = 0; j < 10; ++j) {
                obs[static_cast<std::size_t>(j)] = rng.next_normal() + 2.0;
                pred[static_cast<std::size_t>(j)] = rng.next_normal();
            }
            CHECK(selection::npe(pred, obs).value >= 0.0);
        }
    }
}

TEST_CASE("fold assignment partitions subjects evenly") {
    for (int k : {2, 3, 7, 10}) {
        const auto folds = selection::assign_folds(23, k, 99);
        std::vector<int> sizes(static_cast<std::size_t>(k), 0);
        for (int f : folds) {
            REQUIRE(f >= 0);
            REQUIRE(f < k);
            ++sizes[static_cast<std::size_t>(f)];
        }
        int total = 0, mn = 1 << 30, mx = 0;
        for (int s : sizes) {
            total += s;
            mn = std::min(mn, s);
            mx = std::max(mx, s);
        }
        CHECK(total == 23);
        CHECK(mx - mn <= 1);
    }
    CHECK(selection::assign_folds(10, 10, 5).size() == 10);
    CHECK_THROWS_AS(selection::assign_folds(5, 6, 0), ConfigError);
    CHECK_THROWS_AS(selection::assign_folds(5, 1, 0), ConfigError);
}

TEST_CASE("cv score is zero when responses are identically zero") {
    sim::SimConfig cfg;
    cfg.n = 16;
    cfg.seed = 21;
    auto ds = sim::generate_dataset(cfg);
    for (auto& s : ds.observed.y)
        for (auto& v : s.values) v = 0.0;
    const double score =
        selection::cv_score(ds.observed, cfg.lags1, cfg.lags2, {1e-3, 1e-3}, 4, 7, small_opts());
    CHECK(score < 1e-12);
}

TEST_CASE("leave-one-subject-out runs and is deterministic") {
    sim::SimConfig cfg;
    cfg.n = 20;
    cfg.seed = 31;
    const auto ds = sim::generate_dataset(cfg);
    const double a =
        selection::cv_score(ds.observed, cfg.lags1, cfg.lags2, {1e-3, 1e-3}, 20, 3, small_opts());
    const double b =
        selection::cv_score(ds.observed, cfg.lags1, cfg.lags2, {1e-3, 1e-3}, 20, 3, small_opts());
    CHECK(std::isfinite(a));
    CHECK(a > 0.0);
    CHECK(a == b);  // bitwise
}

TEST_CASE("singleton search space returns its only candidate") {
    sim::SimConfig cfg;
    cfg.n = 14;
    cfg.seed = 8;
    const auto ds = sim::generate_dataset(cfg);
    selection::SearchSpace space;
    space.d1 = {LagWindow{0.1, 0.4}};
    space.d2 = {LagWindow{0.1, 0.4}};
    space.rho_grid = {{1e-3, 1e-3}};
    space.k_folds = 3;
    const auto res = selection::select_hyperparameters(ds.observed, space, 5, small_opts());
    REQUIRE(res.table.size() == 1);
    CHECK(res.best_index == 0);
    CHECK(res.best().rho1 == 1e-3);
    CHECK(std::isfinite(res.best().cv));
}

TEST_CASE("the stored rho attains the smallest in-sample NPE") {
    sim::SimConfig cfg;
    cfg.n = 18;
    cfg.seed = 13;
    const auto ds = sim::generate_dataset(cfg);
    const auto opts = small_opts();
    selection::SearchSpace space;
    space.d1 = {LagWindow{0.1, 0.4}, LagWindow{0.1, 0.3}};
    space.d2 = {LagWindow{0.1, 0.4}};
    space.rho_grid = selection::default_rho_grid(1e-4, 1e-2, 4);
    space.k_folds = 3;
    const auto res = selection::select_hyperparameters(ds.observed, space, 17, opts);
    REQUIRE(res.table.size() == 2);

    // Post-hoc audit: recompute the NPE of every rho for each candidate.
    const auto surfaces = model::estimate_surfaces(ds.observed, opts);
    for (const auto& row : res.table) {
        double best = std::numeric_limits<double>::infinity();
        double best_rho = 0.0;
        for (const auto& rho : space.rho_grid) {
            const auto fit = model::fit_with_surfaces(surfaces, row.lags1, row.lags2, rho, opts);
            const auto npe = selection::in_sample_npe(fit, ds.observed, opts.threads);
            if (npe.value < best) {
                best = npe.value;
                best_rho = rho.first;
            }
        }
        CHECK(row.rho1 == best_rho);
        CHECK(row.npe == doctest::Approx(best).epsilon(1e-12));
    }
}

TEST_CASE("the lag decision is made by CV, not by in-sample NPE") {
    // Seeded instance where the wide window wins in-sample but loses CV.
    sim::SimConfig cfg;
    cfg.n = 20;
    cfg.seed = 11;
    cfg.snr = 4.0;
    const auto ds = sim::generate_dataset(cfg);
    const std::vector<std::pair<LagWindow, LagWindow>> candidates = {
        {LagWindow{0.1, 0.4}, LagWindow{0.1, 0.4}},
        {LagWindow{0.1, 0.55}, LagWindow{0.1, 0.55}},
    };
    const std::vector<std::pair<double, double>> rho = {{1e-4, 1e-4}, {1e-3, 1e-3}, {1e-2, 1e-2}};
    const auto res =
        selection::select_over_candidates(ds.observed, candidates, rho, 4, cfg.seed, small_opts());
    REQUIRE(res.table.size() == 2);
    CHECK(res.table[1].npe < res.table[0].npe);  // wide window overfits in-sample
    CHECK(res.table[1].cv > res.table[0].cv);    // and pays for it out-of-sample
    CHECK(res.best_index == 0);                  // CV decides
}

TEST_CASE("selection is bitwise deterministic across thread budgets") {
    sim::SimConfig cfg;
    cfg.n = 15;
    cfg.seed = 77;
    const auto ds = sim::generate_dataset(cfg);
    selection::SearchSpace space;
    space.d1 = {LagWindow{0.1, 0.4}, LagWindow{0.1, 0.3}};
    space.d2 = {LagWindow{0.1, 0.4}};
    space.rho_grid = {{1e-4, 1e-4}, {1e-2, 1e-2}};
    space.k_folds = 3;

    auto opts1 = small_opts();
    opts1.threads = 1;
    auto opts2 = small_opts();
    opts2.threads = 2;
    const auto r1 = selection::select_hyperparameters(ds.observed, space, 123, opts1);
    const auto r2 = selection::select_hyperparameters(ds.observed, space, 123, opts2);
    REQUIRE(r1.table.size() == r2.table.size());
    CHECK(r1.best_index == r2.best_index);
    for (std::size_t c = 0; c < r1.table.size(); ++c) {
        CHECK(r1.table[c].npe == r2.table[c].npe);
        CHECK(r1.table[c].cv == r2.table[c].cv);
        CHECK(r1.table[c].rho1 == r2.table[c].rho1);
    }
}

TEST_CASE("default rho grid matches the documented spacing") {
    const auto grid = selection::default_rho_grid();
    REQUIRE(grid.size() == 20);
    CHECK(grid.front().first == doctest::Approx(1e-5).epsilon(1e-12));
    CHECK(grid.back().second == doctest::Approx(1e-2).epsilon(1e-12));
    for (std::size_t i = 1; i < grid.size(); ++i) {
        CHECK(grid[i].first > grid[i - 1].first);
        CHECK(grid[i].first == grid[i].second);
    }
}
