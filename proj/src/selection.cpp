#include "lagflm/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "lagflm/parallel.hpp"
#include "lagflm/rng.hpp"

namespace lagflm::selection {

namespace {

constexpr double kObservationGuard = 1e-8;

DataBundle subset(const DataBundle& data, const std::vector<char>& keep) {
    DataBundle out;
    std::vector<Eigen::Index> rows;
    for (std::size_t i = 0; i < data.subjects(); ++i) {
        if (!keep[i]) continue;
        out.subject_ids.push_back(data.subject_ids[i]);
        out.y.push_back(data.y[i]);
        out.x2.push_back(data.x2[i]);
        out.has_x1.push_back(data.has_x1[i]);
        rows.push_back(static_cast<Eigen::Index>(i));
    }
    out.x1.grid = data.x1.grid;
    out.x1.values.resize(static_cast<Eigen::Index>(rows.size()), data.x1.values.cols());
    for (std::size_t r = 0; r < rows.size(); ++r)
        out.x1.values.row(static_cast<Eigen::Index>(r)) = data.x1.values.row(rows[r]);
    return out;
}

struct Fold {
    DataBundle train;
    DataBundle heldout;
    model::SurfaceSet train_surfaces;
};

std::vector<Fold> build_folds(const DataBundle& data, int k_folds, std::uint64_t seed,
                              const model::FitOptions& opts) {
    const std::vector<int> fold_of = assign_folds(data.subjects(), k_folds, seed);
    std::vector<Fold> folds(static_cast<std::size_t>(k_folds));
    for (int k = 0; k < k_folds; ++k) {
        std::vector<char> in_train(data.subjects()), in_test(data.subjects());
        for (std::size_t i = 0; i < data.subjects(); ++i) {
            in_train[i] = fold_of[i] != k;
            in_test[i] = fold_of[i] == k;
        }
        auto& f = folds[static_cast<std::size_t>(k)];
        f.train = subset(data, in_train);
        f.heldout = subset(data, in_test);
        f.train_surfaces = model::estimate_surfaces(f.train, opts);
    }
    return folds;
}

double cv_from_folds(std::span<const Fold> folds, model::LagWindow lags1, model::LagWindow lags2,
                     std::pair<double, double> rho, const model::FitOptions& opts) {
    double total = 0.0;
    for (std::size_t k = 0; k < folds.size(); ++k) {
        const model::ModelFit fit =
            model::fit_with_surfaces(folds[k].train_surfaces, lags1, lags2, rho, opts);
        const auto pred = model::predict_at_observations(fit, folds[k].heldout, opts.threads);
        double fold_sum = 0.0;
        std::size_t fold_used = 0;
        for (std::size_t i = 0; i < pred.size(); ++i) {
            for (std::size_t j = 0; j < pred[i].size(); ++j) {
                if (std::isnan(pred[i][j])) continue;
                const double d = pred[i][j] - folds[k].heldout.y[i].values[j];
                fold_sum += d * d;
                ++fold_used;
            }
        }
        if (fold_used == 0)
            throw FoldDegeneracyError("fold " + std::to_string(k) +
                                      " has no response times inside the valid interval");
        total += fold_sum;
    }
    return total / static_cast<double>(folds.size());
}

bool better_candidate(const CandidateScore& a, const CandidateScore& b) {
    if (a.cv != b.cv) return a.cv < b.cv;
    const double vol_a = (a.lags1.upper - a.lags1.lower) + (a.lags2.upper - a.lags2.lower);
    const double vol_b = (b.lags1.upper - b.lags1.lower) + (b.lags2.upper - b.lags2.lower);
    if (vol_a != vol_b) return vol_a < vol_b;
    const auto key_a = std::array<double, 4>{a.lags1.lower, a.lags1.upper, a.lags2.lower, a.lags2.upper};
    const auto key_b = std::array<double, 4>{b.lags1.lower, b.lags1.upper, b.lags2.lower, b.lags2.upper};
    return key_a < key_b;
}

}  // namespace

std::vector<std::pair<double, double>> default_rho_grid(double lo, double hi, int count) {
    if (!(lo > 0.0 && hi > lo) || count < 1) throw ConfigError("invalid rho grid specification");
    std::vector<std::pair<double, double>> grid;
    grid.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        const double w = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
        const double r = std::exp(std::log(lo) + w * (std::log(hi) - std::log(lo)));
        grid.emplace_back(r, r);
    }
    return grid;
}

NpeResult npe(std::span<const double> predicted, std::span<const double> observed) {
    if (predicted.size() != observed.size())
        throw ShapeError("npe: predicted/observed length mismatch");
    if (observed.empty()) throw UndefinedNpeError("npe: no observation pairs");
    NpeResult out;
    double acc = 0.0;
    std::size_t used = 0;
    for (std::size_t j = 0; j < observed.size(); ++j) {
        if (std::isnan(predicted[j]) || std::abs(observed[j]) < kObservationGuard) {
            ++out.excluded;
            continue;
        }
        acc += std::abs(predicted[j] - observed[j]) / std::abs(observed[j]);
        ++used;
    }
    if (used == 0)
        throw UndefinedNpeError("npe: every pair was excluded by the |Y| guard");
    out.value = acc / static_cast<double>(used);
    return out;
}

std::vector<int> assign_folds(std::size_t n_subjects, int k_folds, std::uint64_t seed) {
    if (k_folds < 2 || static_cast<std::size_t>(k_folds) > n_subjects)
        throw ConfigError("fold count must lie in [2, number of subjects]");
    std::vector<std::size_t> order(n_subjects);
    std::iota(order.begin(), order.end(), 0);
    RngStream rng(seed, 0x464F4C44u, 0u, 0u);
    for (std::size_t i = n_subjects; i > 1; --i) {
        const std::size_t j = rng.next_below(i);
        std::swap(order[i - 1], order[j]);
    }
    std::vector<int> fold(n_subjects);
    for (std::size_t pos = 0; pos < n_subjects; ++pos)
        fold[order[pos]] = static_cast<int>(pos % static_cast<std::size_t>(k_folds));
    return fold;
}

NpeResult in_sample_npe(const model::ModelFit& fit, const DataBundle& data, int threads) {
    const auto pred = model::predict_at_observations(fit, data, threads);
    std::vector<double> p, o;
    for (std::size_t i = 0; i < pred.size(); ++i)
        for (std::size_t j = 0; j < pred[i].size(); ++j) {
            p.push_back(pred[i][j]);
            o.push_back(data.y[i].values[j]);
        }
    return npe(p, o);
}

double cv_score(const DataBundle& data, model::LagWindow lags1, model::LagWindow lags2,
                std::pair<double, double> rho, int k_folds, std::uint64_t seed,
                const model::FitOptions& opts) {
    const std::vector<Fold> folds = build_folds(data, k_folds, seed, opts);
    return cv_from_folds(folds, lags1, lags2, rho, opts);
}

SelectionResult select_over_candidates(
    const DataBundle& data, std::span<const std::pair<model::LagWindow, model::LagWindow>> candidates,
    std::span<const std::pair<double, double>> rho_grid, int k_folds, std::uint64_t seed,
    const model::FitOptions& opts) {
    if (candidates.empty()) throw ConfigError("selection: no lag candidates");
    if (rho_grid.empty()) throw ConfigError("selection: no rho candidates");

    const model::SurfaceSet full = model::estimate_surfaces(data, opts);
    const std::vector<Fold> folds = build_folds(data, k_folds, seed, opts);

    SelectionResult out;
    out.table.resize(candidates.size());
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        const auto [l1, l2] = candidates[c];
        CandidateScore score;
        score.lags1 = l1;
        score.lags2 = l2;
        try {
            // Stage 1: in-sample NPE picks rho for this lag pair.
            double best_npe = std::numeric_limits<double>::infinity();
            std::size_t best_r = 0, best_excluded = 0;
            for (std::size_t r = 0; r < rho_grid.size(); ++r) {
                const model::ModelFit fit = model::fit_with_surfaces(full, l1, l2, rho_grid[r], opts);
                const NpeResult res = in_sample_npe(fit, data, opts.threads);
                if (res.value < best_npe) {
                    best_npe = res.value;
                    best_r = r;
                    best_excluded = res.excluded;
                }
            }
            score.rho1 = rho_grid[best_r].first;
            score.rho2 = rho_grid[best_r].second;
            score.npe = best_npe;
            score.npe_excluded = best_excluded;
            // Stage 2: CV score at the chosen rho decides between lag pairs.
            score.cv = cv_from_folds(folds, l1, l2, rho_grid[best_r], opts);
        } catch (const std::exception& e) {
            throw NumericError("selection candidate lags1=[" + std::to_string(l1.lower) + "," +
                               std::to_string(l1.upper) + "] lags2=[" + std::to_string(l2.lower) +
                               "," + std::to_string(l2.upper) + "]: " + e.what());
        }
        out.table[c] = score;
    }

    out.best_index = 0;
    for (std::size_t c = 1; c < out.table.size(); ++c)
        if (better_candidate(out.table[c], out.table[out.best_index])) out.best_index = c;
    return out;
}

SelectionResult select_hyperparameters(const DataBundle& data, const SearchSpace& space,
                                       std::uint64_t seed, const model::FitOptions& opts) {
    if (space.d1.empty() || space.d2.empty()) throw ConfigError("selection: empty lag grids");
    std::vector<std::pair<model::LagWindow, model::LagWindow>> candidates;
    candidates.reserve(space.d1.size() * space.d2.size());
    for (const auto& w1 : space.d1)
        for (const auto& w2 : space.d2) candidates.emplace_back(w1, w2);
    const auto& rho = space.rho_grid.empty() ? default_rho_grid() : space.rho_grid;
    return select_over_candidates(data, candidates, rho, space.k_folds, seed, opts);
}

}  // namespace lagflm::selection
