#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "lagflm/errors.hpp"

namespace lagflm {

inline std::vector<double> linspace(double a, double b, std::size_t n) {
    std::vector<double> g(n);
    if (n == 1) {
        g[0] = a;
        return g;
    }
    const double h = (b - a) / static_cast<double>(n - 1);
    for (std::size_t j = 0; j < n; ++j) g[j] = a + h * static_cast<double>(j);
    g.back() = b;
    return g;
}

// Index of the left grid node of the cell containing x (clamped to the last cell).
inline std::size_t cell_index(std::span<const double> grid, double x) {
    if (grid.size() < 2 || x <= grid.front()) return 0;
    if (x >= grid[grid.size() - 2]) return grid.size() - 2;
    auto it = std::upper_bound(grid.begin(), grid.end(), x);
    return static_cast<std::size_t>(it - grid.begin()) - 1;
}

// Piecewise-linear interpolation, constant extension outside the grid span.
inline double interp1(std::span<const double> grid, std::span<const double> values, double x) {
    if (grid.empty()) throw ShapeError("interp1: empty grid");
    if (grid.size() == 1) return values[0];
    if (x <= grid.front()) return values.front();
    if (x >= grid.back()) return values.back();
    const std::size_t j = cell_index(grid, x);
    const double w = (x - grid[j]) / (grid[j + 1] - grid[j]);
    return (1.0 - w) * values[j] + w * values[j + 1];
}

// Trapezoid quadrature weights for a (possibly irregular) grid.
inline std::vector<double> trapezoid_weights(std::span<const double> grid) {
    const std::size_t m = grid.size();
    std::vector<double> w(m, 0.0);
    if (m == 1) {
        w[0] = 1.0;
        return w;
    }
    for (std::size_t j = 0; j + 1 < m; ++j) {
        const double h = grid[j + 1] - grid[j];
        w[j] += 0.5 * h;
        w[j + 1] += 0.5 * h;
    }
    return w;
}

inline double trapezoid(std::span<const double> grid, std::span<const double> values) {
    double acc = 0.0;
    for (std::size_t j = 0; j + 1 < grid.size(); ++j)
        acc += 0.5 * (grid[j + 1] - grid[j]) * (values[j] + values[j + 1]);
    return acc;
}

}  // namespace lagflm
