#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "lagflm/data.hpp"
#include "lagflm/grid.hpp"

namespace lagflm::smoothing {

enum class KernelFamily { epanechnikov, gaussian };

// Bandwidths <= 0 mean AUTO: rule-of-thumb rates scaled by the factors below.
//   1-D scatter:    b = factor_1d * range * N^(-1/5)
//   surface scatter: b = factor_2d * range * N_pairs^(-1/6)
//   dense panel:    b = factor_2d * 2.5 * grid spacing (products are already
//                    averaged over subjects, so only cell-scale roughness is left)
//   curve recovery: b = factor_recovery * range * m^(-1/5) for one subject's
//                    dense trajectory
struct SmoothingConfig {
    double bandwidth_1d = 0.0;
    double bandwidth_2d = 0.0;
    KernelFamily kernel = KernelFamily::epanechnikov;
    double factor_1d = 1.0;
    double factor_2d = 0.75;
    double factor_recovery = 0.25;
};

double resolve_bandwidth_1d(const SmoothingConfig& cfg, double range, std::size_t n_points);
double resolve_bandwidth_2d(const SmoothingConfig& cfg, double range, std::size_t n_pairs);
double resolve_bandwidth_recovery(const SmoothingConfig& cfg, double range, std::size_t n_points);

// Symmetric (or rectangular, for cross-covariances) surface tabulated on a
// grid pair; sampled by bilinear interpolation with constant extension.
struct CovarianceSurface {
    std::vector<double> s_grid;
    std::vector<double> u_grid;
    Eigen::MatrixXd values;               // s_grid.size() x u_grid.size()
    std::vector<double> raw_diagonal;     // optional: pre-smoothing variance at s_grid
    std::vector<double> smoothed_diagonal;  // optional: bias-reduced (local quadratic) C(t,t)
    bool undersmoothed = false;
    double bandwidth = 0.0;               // resolved bandwidth actually used

    bool square() const { return s_grid.size() == u_grid.size() && s_grid == u_grid; }

    double at(double s, double u) const {
        const std::size_t i = cell_index(s_grid, s);
        const std::size_t j = cell_index(u_grid, u);
        const double ws = s_grid.size() < 2 ? 0.0
            : std::clamp((s - s_grid[i]) / (s_grid[i + 1] - s_grid[i]), 0.0, 1.0);
        const double wu = u_grid.size() < 2 ? 0.0
            : std::clamp((u - u_grid[j]) / (u_grid[j + 1] - u_grid[j]), 0.0, 1.0);
        const auto ii = static_cast<Eigen::Index>(i);
        const auto jj = static_cast<Eigen::Index>(j);
        const Eigen::Index i1 = s_grid.size() < 2 ? ii : ii + 1;
        const Eigen::Index j1 = u_grid.size() < 2 ? jj : jj + 1;
        return (1.0 - ws) * ((1.0 - wu) * values(ii, jj) + wu * values(ii, j1)) +
               ws * ((1.0 - wu) * values(i1, jj) + wu * values(i1, j1));
    }
};

// Local linear smoother of scattered (time, value) points, reusable at
// arbitrary evaluation points. Widens the window locally when the design
// within the bandwidth is degenerate.
class LocalLinear1D {
public:
    LocalLinear1D(std::span<const double> times, std::span<const double> values, double bandwidth,
                  KernelFamily kernel = KernelFamily::epanechnikov);

    double operator()(double t) const;
    double bandwidth() const { return bandwidth_; }

private:
    std::vector<double> times_;
    std::vector<double> values_;
    double bandwidth_;
    double range_;
    KernelFamily kernel_;
};

// Pooled local linear fit on eval_grid. Exact on affine data.
std::vector<double> local_linear_1d(std::span<const double> times, std::span<const double> values,
                                    const SmoothingConfig& cfg, std::span<const double> eval_grid);

// Bivariate kernel average of the subject-averaged raw products of a centered
// panel; output lives on the panel grid. Same-index products are kept, so the
// diagonal absorbs measurement-error variance.
CovarianceSurface dense_covariance(const DenseFunctionalPanel& panel, const SmoothingConfig& cfg);

// Local linear surface smoother of off-diagonal raw products of centered
// sparse samples; raw_diagonal carries the 1-D smooth of same-index squares.
CovarianceSurface sparse_covariance(std::span<const SparseFunctionalSample> samples,
                                    const SmoothingConfig& cfg, std::span<const double> out_grid,
                                    int threads = 1);

// Local linear surface smoother of same-subject cross products between two
// variables (index-aligned per subject). No diagonal exclusion: cross
// products never share a noise term.
CovarianceSurface cross_covariance(std::span<const SparseFunctionalSample> a,
                                   std::span<const SparseFunctionalSample> b,
                                   const SmoothingConfig& cfg, std::span<const double> out_grid_s,
                                   std::span<const double> out_grid_u, int threads = 1);

// max(0, mean of raw - smoothed over the central half of the grid).
double estimate_noise_variance(std::span<const double> raw_diagonal,
                               std::span<const double> smoothed_diagonal,
                               std::span<const double> grid);

// Unsmoothed second-moment surfaces for curves tabulated on common grids;
// these feed the same induced-covariance path as the smoothed estimates.
CovarianceSurface empirical_covariance(const Eigen::MatrixXd& curves, std::span<const double> grid);
CovarianceSurface empirical_cross_covariance(const Eigen::MatrixXd& a, std::span<const double> a_grid,
                                             const Eigen::MatrixXd& b, std::span<const double> b_grid);

// View of a dense panel as per-subject samples (for the cross-covariance pairings).
std::vector<SparseFunctionalSample> panel_to_samples(const DenseFunctionalPanel& panel,
                                                     std::span<const char> has_row);

}  // namespace lagflm::smoothing
