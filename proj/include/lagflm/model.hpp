#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lagflm/basis.hpp"
#include "lagflm/data.hpp"
#include "lagflm/fpca.hpp"
#include "lagflm/smoothing.hpp"

namespace lagflm::model {

// Past-offset window: predictor values X(t-s), s in [lower, upper], act on Y(t).
struct LagWindow {
    double lower = 0.0;
    double upper = 0.0;

    void validate() const {
        if (!(lower >= 0.0 && lower < upper && upper <= 1.0))
            throw InvalidIntervalError("lag window [" + std::to_string(lower) + ", " +
                                       std::to_string(upper) + "] must satisfy 0 <= lower < upper <= 1");
    }
    basis::Interval as_interval() const { return {lower, upper}; }
};

struct FitOptions {
    int basis_order = 4;
    int interior_knots = 10;
    int quad_nodes = 30;
    int eval_grid_size = 100;
    int surface_grid_size = 100;
    double fve = 0.99;
    smoothing::SmoothingConfig smoothing{};
    int threads = 1;
};

// Everything estimated from data that does not depend on the lag windows or
// on the ridge parameters: the five covariance surfaces, the mean/intercept
// curves and the FPCA of the sparse predictor. A lag/rho search re-weights
// these fixed estimates, so they are computed once per dataset (or fold).
struct SurfaceSet {
    std::vector<double> domain_grid;
    std::vector<double> mean_x1;
    std::vector<double> mean_x2;
    std::vector<double> beta0;
    smoothing::CovarianceSurface cov_x1;    // auto-covariance of X1
    smoothing::CovarianceSurface cov_x2;    // auto-covariance of X2 (raw_diagonal filled)
    smoothing::CovarianceSurface cov_x1x2;  // s axis: X1 time, u axis: X2 time
    smoothing::CovarianceSurface cov_x1y;   // s axis: X1 time, u axis: Y time
    smoothing::CovarianceSurface cov_x2y;   // s axis: X2 time, u axis: Y time
    double noise_x2 = 0.0;
    fpca::Eigensystem eig_x2;
    int n_subjects = 0;
};

// Borrowed pointers to the five surfaces; lets tests drive the solve with
// empirical (unsmoothed) covariances through the production path.
struct CovarianceViews {
    const smoothing::CovarianceSurface* x1 = nullptr;
    const smoothing::CovarianceSurface* x2 = nullptr;
    const smoothing::CovarianceSurface* x1x2 = nullptr;
    const smoothing::CovarianceSurface* x1y = nullptr;
    const smoothing::CovarianceSurface* x2y = nullptr;
};

CovarianceViews views(const SurfaceSet& s);

struct InducedCovariances {
    double t = 0.0;
    Eigen::MatrixXd c11, c12, c21, c22;
    Eigen::VectorXd c1y, c2y;
};

// Tensor-product Gauss-Legendre evaluation of the basis-weighted covariance
// integrals at time t. Requires t in [max upper lag, 1].
InducedCovariances induced_covariance_matrices(const CovarianceViews& cov,
                                               const basis::BasisSystem& basis1,
                                               const basis::BasisSystem& basis2, LagWindow lags1,
                                               LagWindow lags2, double t, int quad_nodes);

struct ModelFit {
    ModelFit(basis::BasisSystem b1, basis::BasisSystem b2)
        : basis1(std::move(b1)), basis2(std::move(b2)) {}

    basis::BasisSystem basis1;
    basis::BasisSystem basis2;
    LagWindow lags1, lags2;
    double rho1 = 0.0, rho2 = 0.0;
    double valid_lower = 0.0;            // valid interval is [valid_lower, 1]

    std::vector<double> domain_grid;     // carrier for the curves below
    std::vector<double> mean_x1;
    std::vector<double> mean_x2;
    std::vector<double> beta0;           // intercept on domain_grid

    std::vector<double> eval_grid;       // inside the valid interval
    std::vector<double> intercept;       // beta0 at eval_grid
    Eigen::MatrixXd b1;                  // K1 x eval_grid.size()
    Eigen::MatrixXd b2;                  // K2 x eval_grid.size()

    fpca::Eigensystem eig_x2;
    double noise_x2 = 0.0;
    int truncation = 0;                  // L (0 when the X2 covariance has no signal)
    double fve = 0.99;
    int quad_nodes = 30;
    smoothing::SmoothingConfig smoothing{};  // reused for X1 recovery at prediction

    double intercept_at(double t) const;
    Eigen::VectorXd b1_at(double t) const;   // linear interpolation between eval columns
    Eigen::VectorXd b2_at(double t) const;
};

// Pooled local linear smooth of the raw responses (the model intercept).
std::vector<double> estimate_intercept(std::span<const SparseFunctionalSample> responses,
                                       const smoothing::SmoothingConfig& cfg,
                                       std::span<const double> eval_grid);

SurfaceSet estimate_surfaces(const DataBundle& data, const FitOptions& opts);

ModelFit fit_with_surfaces(const SurfaceSet& surfaces, LagWindow lags1, LagWindow lags2,
                           std::pair<double, double> rho, const FitOptions& opts);

ModelFit fit(const DataBundle& data, LagWindow lags1, LagWindow lags2,
             std::pair<double, double> rho, const FitOptions& opts);

// beta_hat(s, t) = sum_k B_k(s) b_k(t) for predictor `which` (1 or 2);
// result is s_grid.size() x t_grid.size().
Eigen::MatrixXd coefficient_surface(const ModelFit& fit, int which, std::span<const double> s_grid,
                                    std::span<const double> t_grid);

// Prediction for a new subject from its dense X1 observations and sparse X2
// observations, at times inside the valid interval. X1 is recovered by local
// linear smoothing, X2 by BLUP scores in the stored eigensystem; the
// intercept is added back so predictions live on the raw response scale.
std::vector<double> predict(const ModelFit& fit, const SparseFunctionalSample& x1_obs,
                            const SparseFunctionalSample& x2_obs,
                            std::span<const double> eval_times);

// Predictions for every subject of `data` at its own y observation times.
// Entries at times outside the valid interval are NaN (callers skip them).
std::vector<std::vector<double>> predict_at_observations(const ModelFit& fit,
                                                         const DataBundle& data, int threads = 1);

// (Z' Z + diag(rho1 I_K1, rho2 I_K2))^{-1} Z' y.
Eigen::VectorXd ridge_solve_blocks(const Eigen::MatrixXd& z, const Eigen::VectorXd& y, double rho1,
                                   double rho2, int k1, int k2);

// Common-grid reference problem: every subject observed at the same times,
// predictors given as curves on a dense grid (interpolated linearly inside
// the quadrature). Solves the penalized least squares exactly per time point.
struct CommonGridData {
    std::vector<double> times;       // shared response times
    Eigen::MatrixXd y;               // n x times.size()
    std::vector<double> curve_grid;  // grid carrying both predictor curves
    Eigen::MatrixXd x1;              // n x curve_grid.size()
    Eigen::MatrixXd x2;              // n x curve_grid.size()
};

struct OracleCoefficients {
    std::vector<double> times;  // the subset of input times inside the valid interval
    Eigen::MatrixXd b1;         // K1 x times.size()
    Eigen::MatrixXd b2;         // K2 x times.size()
};

OracleCoefficients fit_common_grid_oracle(const CommonGridData& data, LagWindow lags1,
                                          LagWindow lags2, std::pair<double, double> rho,
                                          int basis_order, int interior_knots, int quad_nodes);

}  // namespace lagflm::model
