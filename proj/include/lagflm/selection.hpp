#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "lagflm/data.hpp"
#include "lagflm/model.hpp"

namespace lagflm::selection {

struct SearchSpace {
    std::vector<model::LagWindow> d1;
    std::vector<model::LagWindow> d2;
    std::vector<std::pair<double, double>> rho_grid;
    int k_folds = 10;
};

// rho1 = rho2, logarithmically spaced on [lo, hi].
std::vector<std::pair<double, double>> default_rho_grid(double lo = 1e-5, double hi = 1e-2,
                                                        int count = 20);

struct NpeResult {
    double value = 0.0;
    std::size_t excluded = 0;  // pairs dropped by the |Y| guard or missing predictions
};

// Mean of |pred - obs| / |obs| over retained pairs. Pairs with |obs| < 1e-8
// or with NaN predictions are excluded (and counted); all-excluded is an error.
NpeResult npe(std::span<const double> predicted, std::span<const double> observed);

// Deterministic subject partition: disjoint folds covering everyone, sizes
// differing by at most one.
std::vector<int> assign_folds(std::size_t n_subjects, int k_folds, std::uint64_t seed);

struct CandidateScore {
    model::LagWindow lags1, lags2;
    double rho1 = 0.0, rho2 = 0.0;  // NPE-optimal rho for this lag candidate
    double npe = 0.0;
    std::size_t npe_excluded = 0;
    double cv = 0.0;
};

struct SelectionResult {
    std::size_t best_index = 0;
    std::vector<CandidateScore> table;

    const CandidateScore& best() const { return table[best_index]; }
};

// In-sample NPE of a fit against the bundle's observed responses
// (observation times outside the valid interval are skipped).
NpeResult in_sample_npe(const model::ModelFit& fit, const DataBundle& data, int threads = 1);

// K-fold cross-validation score of one (lags, rho) candidate: subjects are
// partitioned by seeded shuffle, the model is refit on each complement and
// held-out squared prediction errors are accumulated, divided by K.
double cv_score(const DataBundle& data, model::LagWindow lags1, model::LagWindow lags2,
                std::pair<double, double> rho, int k_folds, std::uint64_t seed,
                const model::FitOptions& opts);

// Hierarchical search over explicit joint lag candidates: per candidate the
// rho with the smallest in-sample NPE is kept, then candidates are ranked by
// the CV score at that rho. Ties go to the smaller total window volume, then
// to lexicographic order.
SelectionResult select_over_candidates(
    const DataBundle& data, std::span<const std::pair<model::LagWindow, model::LagWindow>> candidates,
    std::span<const std::pair<double, double>> rho_grid, int k_folds, std::uint64_t seed,
    const model::FitOptions& opts);

// Cartesian D1 x D2 search per the SearchSpace.
SelectionResult select_hyperparameters(const DataBundle& data, const SearchSpace& space,
                                       std::uint64_t seed, const model::FitOptions& opts);

}  // namespace lagflm::selection
