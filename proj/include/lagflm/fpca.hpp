#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "lagflm/data.hpp"
#include "lagflm/smoothing.hpp"

namespace lagflm::fpca {

// Spectral decomposition of a covariance surface on its grid. Eigenvalues
// approximate the Mercer eigenvalues (trapezoid-weighted integral problem)
// and eigenfunctions have unit L2 norm under the same weights. Negative
// eigenvalues are dropped, which is also the PSD repair used downstream.
struct Eigensystem {
    std::vector<double> grid;
    std::vector<double> eigenvalues;   // nonincreasing, > 0
    Eigen::MatrixXd eigenfunctions;    // grid.size() x eigenvalues.size()
    double noise_variance = 0.0;

    std::size_t components() const { return eigenvalues.size(); }
    double total_variance() const;
    double eigenfunction_at(std::size_t l, double t) const;
};

struct ScoreEstimate {
    Eigen::VectorXd scores;  // length L
    int truncation = 0;
};

Eigensystem eigendecompose(const smoothing::CovarianceSurface& c, double noise_variance);

// Smallest L explaining at least `fve` of the total retained variance.
int select_truncation(const Eigensystem& e, double fve);

// Best linear predictor of the first L Karhunen-Loeve scores from one
// subject's sparse noisy observations: xi_l = lambda_l phi_l' Sigma^{-1} W,
// with Sigma rebuilt from the retained eigenpairs plus the noise ridge.
ScoreEstimate blup_scores(const Eigensystem& e, const SparseFunctionalSample& obs, int L);

std::vector<double> reconstruct_curve(const Eigensystem& e, const ScoreEstimate& s,
                                      std::span<const double> eval_grid);

}  // namespace lagflm::fpca
