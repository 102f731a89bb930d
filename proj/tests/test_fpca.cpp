#include <doctest.h>

#include <cmath>

#include "lagflm/fpca.hpp"
#include "lagflm/grid.hpp"
#include "lagflm/smoothing.hpp"
#include "support.hpp"

using namespace lagflm;
using namespace testsupport;

namespace {

smoothing::CovarianceSurface tabulate(const std::function<double(double, double)>& f,
                                      const std::vector<double>& grid) {
    smoothing::CovarianceSurface surf;
    surf.s_grid = grid;
    surf.u_grid = grid;
    surf.values.resize(static_cast<Eigen::Index>(grid.size()), static_cast<Eigen::Index>(grid.size()));
    for (std::size_t i = 0; i < grid.size(); ++i)
        for (std::size_t j = 0; j < grid.size(); ++j)
            surf.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                f(grid[i], grid[j]);
    return surf;
}

// Analytic rank-1 eigensystem of cos x cos: lambda = 1/2, phi = sqrt(2) cos.
fpca::Eigensystem analytic_cos_system(const std::vector<double>& grid, double noise_variance) {
    fpca::Eigensystem e;
    e.grid = grid;
    e.eigenvalues = {0.5};
    e.eigenfunctions.resize(static_cast<Eigen::Index>(grid.size()), 1);
    for (std::size_t j = 0; j < grid.size(); ++j)
        e.eigenfunctions(static_cast<Eigen::Index>(j), 0) = std::sqrt(2.0) * std::cos(kTwoPi * grid[j]);
    e.noise_variance = noise_variance;
    return e;
}

}  // namespace

TEST_CASE("rank-1 cosine kernel decomposes analytically") {
    const auto grid = linspace(0.0, 1.0, 100);
    const auto surf = tabulate(
        [](double s, double u) { return std::cos(kTwoPi * s) * std::cos(kTwoPi * u); }, grid);
    const auto e = fpca::eigendecompose(surf, 0.0);
    REQUIRE(e.components() >= 1);
    CHECK(std::abs(e.eigenvalues[0] - 0.5) < 2e-3);
    if (e.components() > 1) CHECK(e.eigenvalues[1] < 1e-6);
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const double want = std::sqrt(2.0) * std::cos(kTwoPi * grid[j]);
        CHECK(std::abs(e.eigenfunctions(static_cast<Eigen::Index>(j), 0) - want) < 2e-2);
    }
}

TEST_CASE("zero surface has no components") {
    const auto grid = linspace(0.0, 1.0, 40);
    const auto surf = tabulate([](double, double) { return 0.0; }, grid);
    const auto e = fpca::eigendecompose(surf, 0.0);
    CHECK(e.components() == 0);
}

TEST_CASE("asymmetric surfaces are rejected") {
    const auto grid = linspace(0.0, 1.0, 20);
    auto surf = tabulate([](double s, double u) { return s * u; }, grid);
    surf.values(3, 7) += 1e-4;
    CHECK_THROWS_AS(fpca::eigendecompose(surf, 0.0), ShapeError);
}

TEST_CASE("rank-2 kernel keeps exactly two components") {
    const auto grid = linspace(0.0, 1.0, 100);
    const auto surf = tabulate(
        [](double s, double u) {
            return std::sin(kTwoPi * s) * std::sin(kTwoPi * u) + s * s * u * u;
        },
        grid);
    const auto e = fpca::eigendecompose(surf, 0.0);
    std::size_t above = 0;
    for (double l : e.eigenvalues)
        if (l > 1e-6) ++above;
    CHECK(above == 2);

    // Gram-matrix oracle: eigenvalues of [<f,f> <f,g>; <g,f> <g,g>].
    auto f = [](double t) { return std::sin(kTwoPi * t); };
    auto g = [](double t) { return t * t; };
    const double ff = midpoint_integral([&](double t) { return f(t) * f(t); }, 0.0, 1.0);
    const double fg = midpoint_integral([&](double t) { return f(t) * g(t); }, 0.0, 1.0);
    const double gg = midpoint_integral([&](double t) { return g(t) * g(t); }, 0.0, 1.0);
    const double tr = ff + gg;
    const double det = ff * gg - fg * fg;
    const double l1 = 0.5 * (tr + std::sqrt(tr * tr - 4.0 * det));
    const double l2 = 0.5 * (tr - std::sqrt(tr * tr - 4.0 * det));
    CHECK(std::abs(e.eigenvalues[0] - l1) < 1e-3);
    CHECK(std::abs(e.eigenvalues[1] - l2) < 1e-3);
}

TEST_CASE("eigenfunctions are orthonormal under trapezoid weights") {
    const auto samples = sparse_x2(7, 200, 40, std::sqrt(0.5 / 20.0));
    smoothing::SmoothingConfig cfg;
    const auto grid = linspace(0.0, 1.0, 60);
    const auto surf = smoothing::sparse_covariance(samples, cfg, grid, 2);
    const auto e = fpca::eigendecompose(surf, 0.01);
    REQUIRE(e.components() >= 1);
    const auto w = trapezoid_weights(grid);
    for (std::size_t l = 0; l < e.components(); ++l)
        for (std::size_t m = 0; m <= l; ++m) {
            double ip = 0.0;
            for (std::size_t j = 0; j < grid.size(); ++j)
                ip += w[j] * e.eigenfunctions(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(l)) *
                      e.eigenfunctions(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(m));
            CHECK(std::abs(ip - (l == m ? 1.0 : 0.0)) < 1e-8);
        }
}

TEST_CASE("sign convention is stable across reruns") {
    const auto samples = sparse_x2(19, 150, 30, 0.1);
    smoothing::SmoothingConfig cfg;
    const auto grid = linspace(0.0, 1.0, 50);
    const auto surf = smoothing::sparse_covariance(samples, cfg, grid, 2);
    const auto e1 = fpca::eigendecompose(surf, 0.01);
    const auto e2 = fpca::eigendecompose(surf, 0.01);
    CHECK((e1.eigenfunctions - e2.eigenfunctions).cwiseAbs().maxCoeff() == 0.0);
    for (std::size_t l = 0; l < e1.components(); ++l) {
        Eigen::Index arg = 0;
        e1.eigenfunctions.col(static_cast<Eigen::Index>(l)).cwiseAbs().maxCoeff(&arg);
        CHECK(e1.eigenfunctions(arg, static_cast<Eigen::Index>(l)) > 0.0);
    }
}

TEST_CASE("truncation selection by fraction of variance explained") {
    fpca::Eigensystem e;
    e.grid = linspace(0.0, 1.0, 3);
    SUBCASE("single component") {
        e.eigenvalues = {0.5};
        e.eigenfunctions = Eigen::MatrixXd::Ones(3, 1);
        CHECK(fpca::select_truncation(e, 0.95) == 1);
    }
    SUBCASE("two needed at 95 percent") {
        e.eigenvalues = {0.9, 0.1};
        e.eigenfunctions = Eigen::MatrixXd::Ones(3, 2);
        CHECK(fpca::select_truncation(e, 0.95) == 2);
        CHECK(fpca::select_truncation(e, 0.9) == 1);
    }
    SUBCASE("no signal") {
        e.eigenvalues = {};
        e.eigenfunctions = Eigen::MatrixXd(3, 0);
        CHECK_THROWS_AS(fpca::select_truncation(e, 0.95), NoSignalError);
    }
}

TEST_CASE("estimated rank-1 process keeps one component at 95 percent FVE") {
    int hits = 0;
    const int reps = 20;
    for (int rep = 0; rep < reps; ++rep) {
        const auto samples = sparse_x2(3000 + static_cast<std::uint64_t>(rep), 200, 40,
                                       std::sqrt(0.5 / 20.0));
        smoothing::SmoothingConfig cfg;
        const auto grid = linspace(0.0, 1.0, 50);
        const auto surf = smoothing::sparse_covariance(samples, cfg, grid, 2);
        const auto e = fpca::eigendecompose(surf, 0.025);
        if (fpca::select_truncation(e, 0.95) == 1) ++hits;
    }
    CHECK(hits >= 19);  // >= 95% of replications
}

TEST_CASE("single-observation score reduces to the scalar formula") {
    const auto grid = linspace(0.0, 1.0, 100);
    const auto e = analytic_cos_system(grid, 0.0);
    SparseFunctionalSample obs;
    obs.times = {0.13};
    obs.values = {0.8};
    const auto score = fpca::blup_scores(e, obs, 1);
    const double phi = e.eigenfunction_at(0, 0.13);  // the value the predictor actually uses
    CHECK(score.scores[0] == doctest::Approx(0.8 / phi).epsilon(1e-8));
}

TEST_CASE("zero observations give zero scores") {
    const auto grid = linspace(0.0, 1.0, 100);
    const auto e = analytic_cos_system(grid, 0.3);
    SparseFunctionalSample obs;
    obs.times = {0.1, 0.35, 0.7};
    obs.values = {0.0, 0.0, 0.0};
    const auto score = fpca::blup_scores(e, obs, 1);
    CHECK(score.scores.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("dense noiseless cosine recovers the unit score") {
    const auto grid = linspace(0.0, 1.0, 100);
    const auto e = analytic_cos_system(grid, 0.0);
    SparseFunctionalSample obs;
    obs.times = grid;
    obs.values.resize(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) obs.values[j] = std::cos(kTwoPi * grid[j]);
    const auto score = fpca::blup_scores(e, obs, 1);
    CHECK(std::abs(score.scores[0] - 1.0 / std::sqrt(2.0)) < 1e-2);

    const auto curve = fpca::reconstruct_curve(e, score, grid);
    for (std::size_t j = 0; j < grid.size(); ++j)
        CHECK(std::abs(curve[j] - std::cos(kTwoPi * grid[j])) < 2e-2);
}

TEST_CASE("noise shrinks the one-observation score strictly") {
    const auto grid = linspace(0.0, 1.0, 100);
    SparseFunctionalSample obs;
    obs.times = {0.2};
    obs.values = {1.0};
    const auto clean = fpca::blup_scores(analytic_cos_system(grid, 0.0), obs, 1);
    const auto noisy = fpca::blup_scores(analytic_cos_system(grid, 0.1), obs, 1);
    CHECK(std::abs(noisy.scores[0]) < std::abs(clean.scores[0]));
}

TEST_CASE("ill-conditioned observation covariance is reported") {
    const auto grid = linspace(0.0, 1.0, 100);
    const auto e = analytic_cos_system(grid, 0.0);  // exact rank-1, no noise ridge
    SparseFunctionalSample obs;
    // 400 observations of a rank-1 process with zero noise push the
    // observation covariance past the condition gate.
    const auto times = linspace(0.01, 0.99, 400);
    obs.times = times;
    obs.values.assign(times.size(), 1.0);
    CHECK_THROWS_AS(fpca::blup_scores(e, obs, 1), IllConditionedError);
}

TEST_CASE("zero scores reconstruct the zero curve") {
    const auto grid = linspace(0.0, 1.0, 50);
    const auto e = analytic_cos_system(grid, 0.0);
    fpca::ScoreEstimate s;
    s.truncation = 1;
    s.scores = Eigen::VectorXd::Zero(1);
    const auto curve = fpca::reconstruct_curve(e, s, grid);
    for (double v : curve) CHECK(v == 0.0);
}

TEST_CASE("noiseless curves in the retained span reconstruct exactly") {
    const auto grid = linspace(0.0, 1.0, 100);
    const auto e = analytic_cos_system(grid, 0.0);
    SparseFunctionalSample obs;
    obs.times = grid;
    obs.values.resize(grid.size());
    const double target_score = -0.9;
    for (std::size_t j = 0; j < grid.size(); ++j)
        obs.values[j] = target_score * std::sqrt(2.0) * std::cos(kTwoPi * grid[j]);
    const auto score = fpca::blup_scores(e, obs, 1);
    const auto curve = fpca::reconstruct_curve(e, score, grid);
    double err = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j) err = std::max(err, std::abs(curve[j] - obs.values[j]));
    CHECK(err < 1e-6);
}

TEST_CASE("sparse subjects reconstruct their latent curve") {
    // Estimated eigensystem at n=200, then per-subject BLUP reconstruction.
    const double noise_sd = std::sqrt(0.5 / 20.0);
    const auto samples = sparse_x2(88, 200, 40, noise_sd);
    smoothing::SmoothingConfig cfg;
    const auto grid = linspace(0.0, 1.0, 60);
    const auto surf = smoothing::sparse_covariance(samples, cfg, grid, 2);
    std::vector<double> diag(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j)
        diag[j] = surf.values(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j));
    const double noise = smoothing::estimate_noise_variance(surf.raw_diagonal, diag, grid);
    const auto e = fpca::eigendecompose(surf, noise);
    const int L = fpca::select_truncation(e, 0.99);

    double mse = 0.0, energy = 0.0;
    for (int i = 0; i < 40; ++i) {
        const auto score = fpca::blup_scores(e, samples[static_cast<std::size_t>(i)], L);
        const auto curve = fpca::reconstruct_curve(e, score, grid);
        const double zeta = draw_scores(88, static_cast<std::uint32_t>(i)).zeta;
        for (std::size_t j = 0; j < grid.size(); ++j) {
            const double truth = zeta * std::cos(kTwoPi * grid[j]);
            mse += (curve[j] - truth) * (curve[j] - truth);
            energy += truth * truth;
        }
    }
    CHECK(mse < 0.10 * energy);
}
