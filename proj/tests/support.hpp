#pragma once

// Test-side data generators and analytic oracles, independent of the
// library's simulation module so they can serve as cross-checks for it.

#include <cmath>
#include <vector>

#include "lagflm/data.hpp"
#include "lagflm/grid.hpp"
#include "lagflm/model.hpp"
#include "lagflm/rng.hpp"
#include "lagflm/smoothing.hpp"

namespace testsupport {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kPi = 3.141592653589793238462643383279;

inline double beta0(double t) { return t + std::pow(t, 0.2); }
inline double beta1(double s, double t) { return std::sin(kTwoPi * s) * std::cos(kPi * t); }
inline double beta2(double s, double t) { return std::sin(2.0 * kTwoPi * s) * std::cos(kTwoPi * t); }

// Midpoint-rule integral used as an independent oracle (no Gauss-Legendre).
template <typename F>
double midpoint_integral(F&& f, double lo, double hi, int n = 10000) {
    const double h = (hi - lo) / n;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += f(lo + (i + 0.5) * h);
    return acc * h;
}

struct Scores {
    double xi1 = 0.0, xi2 = 0.0, zeta = 0.0;
};

inline Scores draw_scores(std::uint64_t seed, std::uint32_t subject) {
    lagflm::RngStream rng(seed, subject, 101u, 0u);
    Scores s;
    s.xi1 = rng.next_normal();
    s.xi2 = rng.next_normal();
    s.zeta = rng.next_normal();
    return s;
}

inline double x1_curve(const Scores& s, double t) {
    return s.xi1 * std::sin(kTwoPi * t) + s.xi2 * t * t;
}
inline double x2_curve(const Scores& s, double t) { return s.zeta * std::cos(kTwoPi * t); }

// Sorted uniform times on [lo, hi].
inline std::vector<double> random_times(std::uint64_t seed, std::uint32_t subject,
                                        std::uint32_t tag, int count, double lo = 0.0,
                                        double hi = 1.0) {
    lagflm::RngStream rng(seed, subject, tag, 1u);
    std::vector<double> t(static_cast<std::size_t>(count));
    for (auto& v : t) v = lo + (hi - lo) * rng.next_uniform();
    std::sort(t.begin(), t.end());
    return t;
}

// Sparse draws of the rank-1 process zeta*cos(2*pi*t), optional noise.
inline std::vector<lagflm::SparseFunctionalSample> sparse_x2(std::uint64_t seed, int n, int m,
                                                             double noise_sd) {
    std::vector<lagflm::SparseFunctionalSample> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const Scores s = draw_scores(seed, static_cast<std::uint32_t>(i));
        auto& sample = out[static_cast<std::size_t>(i)];
        sample.subject_id = "t" + std::to_string(i);
        sample.times = random_times(seed, static_cast<std::uint32_t>(i), 7u, m);
        lagflm::RngStream noise(seed, static_cast<std::uint32_t>(i), 8u, 2u);
        for (double t : sample.times)
            sample.values.push_back(x2_curve(s, t) + noise_sd * noise.next_normal());
    }
    return out;
}

// Dense panel of the rank-2 process xi1*sin(2*pi*t) + xi2*t^2.
inline lagflm::DenseFunctionalPanel dense_x1(std::uint64_t seed, int n, int m, double noise_sd) {
    lagflm::DenseFunctionalPanel panel;
    panel.grid.resize(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) panel.grid[static_cast<std::size_t>(j)] = static_cast<double>(j) / (m - 1);
    panel.values.resize(n, m);
    for (int i = 0; i < n; ++i) {
        const Scores s = draw_scores(seed, static_cast<std::uint32_t>(i));
        lagflm::RngStream noise(seed, static_cast<std::uint32_t>(i), 9u, 3u);
        for (int j = 0; j < m; ++j)
            panel.values(i, j) =
                x1_curve(s, panel.grid[static_cast<std::size_t>(j)]) + noise_sd * noise.next_normal();
    }
    return panel;
}

// Latent response value at time t (high-resolution midpoint integrals).
inline double latent_y(const Scores& sc, double t, bool with_intercept = true, int nodes = 2000) {
    const double a1 = midpoint_integral(
        [&](double v) { return beta1(v, t) * std::sin(kTwoPi * (t - v)); }, 0.1, 0.4, nodes);
    const double a2 = midpoint_integral(
        [&](double v) { return beta1(v, t) * (t - v) * (t - v); }, 0.1, 0.4, nodes);
    const double a3 = midpoint_integral(
        [&](double v) { return beta2(v, t) * std::cos(kTwoPi * (t - v)); }, 0.1, 0.4, nodes);
    return (with_intercept ? beta0(t) : 0.0) + sc.xi1 * a1 + sc.xi2 * a2 + sc.zeta * a3;
}

// Noiseless common-grid data of the trigonometric design: every subject
// observed at the same response times, predictors as dense curves.
inline lagflm::model::CommonGridData common_grid_data(std::uint64_t seed, int n,
                                                      std::size_t y_points = 61,
                                                      std::size_t x_points = 100) {
    lagflm::model::CommonGridData data;
    data.times = lagflm::linspace(0.4, 1.0, y_points);
    data.curve_grid = lagflm::linspace(0.0, 1.0, x_points);
    data.y.resize(n, static_cast<Eigen::Index>(y_points));
    data.x1.resize(n, static_cast<Eigen::Index>(x_points));
    data.x2.resize(n, static_cast<Eigen::Index>(x_points));
    for (int i = 0; i < n; ++i) {
        const Scores sc = draw_scores(seed, static_cast<std::uint32_t>(i));
        for (std::size_t j = 0; j < x_points; ++j) {
            data.x1(i, static_cast<Eigen::Index>(j)) = x1_curve(sc, data.curve_grid[j]);
            data.x2(i, static_cast<Eigen::Index>(j)) = x2_curve(sc, data.curve_grid[j]);
        }
        for (std::size_t j = 0; j < y_points; ++j)
            data.y(i, static_cast<Eigen::Index>(j)) = latent_y(sc, data.times[j], false, 400);
    }
    return data;
}

// The five empirical (unsmoothed) covariance surfaces of a common-grid
// dataset, packaged so fit_with_surfaces can run on them directly.
inline lagflm::model::SurfaceSet empirical_surfaces(const lagflm::model::CommonGridData& data) {
    lagflm::model::SurfaceSet s;
    s.n_subjects = static_cast<int>(data.y.rows());
    s.domain_grid = data.curve_grid;
    s.mean_x1.assign(data.curve_grid.size(), 0.0);
    s.mean_x2.assign(data.curve_grid.size(), 0.0);
    s.beta0.assign(data.curve_grid.size(), 0.0);
    s.cov_x1 = lagflm::smoothing::empirical_covariance(data.x1, data.curve_grid);
    s.cov_x2 = lagflm::smoothing::empirical_covariance(data.x2, data.curve_grid);
    s.cov_x1x2 =
        lagflm::smoothing::empirical_cross_covariance(data.x1, data.curve_grid, data.x2, data.curve_grid);
    s.cov_x1y =
        lagflm::smoothing::empirical_cross_covariance(data.x1, data.curve_grid, data.y, data.times);
    s.cov_x2y =
        lagflm::smoothing::empirical_cross_covariance(data.x2, data.curve_grid, data.y, data.times);
    s.noise_x2 = 0.0;
    s.eig_x2 = lagflm::fpca::eigendecompose(s.cov_x2, 0.0);
    return s;
}

}  // namespace testsupport
