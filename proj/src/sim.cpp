#include "lagflm/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "lagflm/basis.hpp"
#include "lagflm/grid.hpp"
#include "lagflm/parallel.hpp"
#include "lagflm/rng.hpp"

namespace lagflm::sim {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kPi = 3.141592653589793238462643383279;

// RNG stream tags; every (replication, subject, variable) triple owns a stream.
enum StreamTag : std::uint32_t {
    kScores = 0,
    kCounts = 1,
    kYTimes = 2,
    kX2Times = 3,
    kX1Noise = 4,
    kX2Noise = 5,
    kYNoise = 6,
};

RngStream stream(const SimConfig& cfg, std::uint32_t subject, StreamTag tag) {
    return RngStream(cfg.seed, cfg.replication, subject, tag);
}

std::vector<std::size_t> draw_indices(RngStream& rng, std::size_t pool, std::size_t count) {
    std::vector<std::size_t> idx(pool);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = pool; i > 1; --i) {
        const std::size_t j = rng.next_below(i);
        std::swap(idx[i - 1], idx[j]);
    }
    idx.resize(count);
    std::sort(idx.begin(), idx.end());
    return idx;
}

double x1_curve(double xi1, double xi2, double t) { return xi1 * std::sin(kTwoPi * t) + xi2 * t * t; }
double x2_curve(double zeta, double t) { return zeta * std::cos(kTwoPi * t); }

}  // namespace

double beta0_true(double t) { return t + std::pow(t, 0.2); }
double beta1_true(double s, double t) { return std::sin(kTwoPi * s) * std::cos(kPi * t); }
double beta2_true(double s, double t) { return std::sin(2.0 * kTwoPi * s) * std::cos(kTwoPi * t); }

double SimulatedDataset::latent_y_at(std::size_t subject, double t) const {
    const auto row = y_latent.row(static_cast<Eigen::Index>(subject));
    const Eigen::VectorXd v = row;
    return interp1(y_grid, std::span<const double>(v.data(), static_cast<std::size_t>(v.size())), t);
}

SimulatedDataset generate_dataset(const SimConfig& cfg) {
    if (cfg.n < 1) throw ConfigError("generate_dataset: n must be >= 1");
    if (cfg.grid_size < 2) throw ConfigError("generate_dataset: grid too small");
    cfg.lags1.validate();
    cfg.lags2.validate();
    if (!(cfg.snr > 0.0)) throw ConfigError("generate_dataset: snr must be positive");

    SimulatedDataset ds;
    ds.grid = linspace(0.0, 1.0, static_cast<std::size_t>(cfg.grid_size));
    const double valid_lower = std::max(cfg.lags1.upper, cfg.lags2.upper);
    for (double t : ds.grid)
        if (t >= valid_lower - 1e-12) ds.y_grid.push_back(t);

    const std::size_t y_pool = ds.y_grid.size();
    if (static_cast<std::size_t>(cfg.m_y_max) > y_pool ||
        static_cast<std::size_t>(cfg.m_x2_max) > ds.grid.size())
        throw ConfigError("generate_dataset: observation count range exceeds the available grid");
    if (cfg.m_y_min < 1 || cfg.m_y_min > cfg.m_y_max || cfg.m_x2_min < 1 ||
        cfg.m_x2_min > cfg.m_x2_max)
        throw ConfigError("generate_dataset: invalid observation count range");

    const auto n = static_cast<std::size_t>(cfg.n);
    const auto g = static_cast<Eigen::Index>(ds.grid.size());
    ds.x1_latent.resize(static_cast<Eigen::Index>(n), g);
    ds.x2_latent.resize(static_cast<Eigen::Index>(n), g);
    ds.y_latent.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(y_pool));
    ds.scores.resize(static_cast<Eigen::Index>(n), 3);

    const basis::QuadratureRule rule1 = basis::gauss_legendre(30, cfg.lags1.as_interval());
    const basis::QuadratureRule rule2 = basis::gauss_legendre(30, cfg.lags2.as_interval());

    for (std::size_t i = 0; i < n; ++i) {
        RngStream rs = stream(cfg, static_cast<std::uint32_t>(i), kScores);
        const double xi1 = rs.next_normal();
        const double xi2 = rs.next_normal();
        const double zeta = rs.next_normal();
        ds.scores(static_cast<Eigen::Index>(i), 0) = xi1;
        ds.scores(static_cast<Eigen::Index>(i), 1) = xi2;
        ds.scores(static_cast<Eigen::Index>(i), 2) = zeta;
        for (Eigen::Index j = 0; j < g; ++j) {
            const double t = ds.grid[static_cast<std::size_t>(j)];
            ds.x1_latent(static_cast<Eigen::Index>(i), j) = x1_curve(xi1, xi2, t);
            ds.x2_latent(static_cast<Eigen::Index>(i), j) = x2_curve(zeta, t);
        }
        for (std::size_t j = 0; j < y_pool; ++j) {
            const double t = ds.y_grid[j];
            double acc = beta0_true(t);
            for (std::size_t q = 0; q < rule1.nodes.size(); ++q)
                acc += rule1.weights[q] * beta1_true(rule1.nodes[q], t) *
                       x1_curve(xi1, xi2, t - rule1.nodes[q]);
            for (std::size_t q = 0; q < rule2.nodes.size(); ++q)
                acc += rule2.weights[q] * beta2_true(rule2.nodes[q], t) *
                       x2_curve(zeta, t - rule2.nodes[q]);
            ds.y_latent(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = acc;
        }
    }

    // SNR calibration against the generated latent signal (second moments).
    const double m2_x1 = ds.x1_latent.array().square().mean();
    const double m2_x2 = ds.x2_latent.array().square().mean();
    const double m2_y = ds.y_latent.array().square().mean();
    ds.sigma_x1 = std::isinf(cfg.snr) ? 0.0 : std::sqrt(m2_x1 / cfg.snr);
    ds.sigma_x2 = std::isinf(cfg.snr) ? 0.0 : std::sqrt(m2_x2 / cfg.snr);
    ds.sigma_y = std::isinf(cfg.snr) ? 0.0 : std::sqrt(m2_y / cfg.snr);

    DataBundle& out = ds.observed;
    out.subject_ids.resize(n);
    out.y.resize(n);
    out.x2.resize(n);
    out.has_x1.assign(n, 1);
    out.x1.grid = ds.grid;
    out.x1.values.resize(static_cast<Eigen::Index>(n), g);

    for (std::size_t i = 0; i < n; ++i) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "s%04zu", i);
        out.subject_ids[i] = buf;

        RngStream rc = stream(cfg, static_cast<std::uint32_t>(i), kCounts);
        const auto m_y = static_cast<std::size_t>(rc.next_int(cfg.m_y_min, cfg.m_y_max));
        const auto m_x2 = static_cast<std::size_t>(rc.next_int(cfg.m_x2_min, cfg.m_x2_max));

        RngStream rt_y = stream(cfg, static_cast<std::uint32_t>(i), kYTimes);
        RngStream rt_x2 = stream(cfg, static_cast<std::uint32_t>(i), kX2Times);
        const auto y_idx = draw_indices(rt_y, y_pool, m_y);
        const auto x2_idx = draw_indices(rt_x2, ds.grid.size(), m_x2);

        RngStream rn_y = stream(cfg, static_cast<std::uint32_t>(i), kYNoise);
        auto& ys = out.y[i];
        ys.subject_id = out.subject_ids[i];
        for (std::size_t k : y_idx) {
            ys.times.push_back(ds.y_grid[k]);
            ys.values.push_back(ds.y_latent(static_cast<Eigen::Index>(i),
                                            static_cast<Eigen::Index>(k)) +
                                ds.sigma_y * rn_y.next_normal());
        }

        RngStream rn_x2 = stream(cfg, static_cast<std::uint32_t>(i), kX2Noise);
        auto& x2s = out.x2[i];
        x2s.subject_id = out.subject_ids[i];
        for (std::size_t k : x2_idx) {
            x2s.times.push_back(ds.grid[k]);
            x2s.values.push_back(ds.x2_latent(static_cast<Eigen::Index>(i),
                                              static_cast<Eigen::Index>(k)) +
                                 ds.sigma_x2 * rn_x2.next_normal());
        }

        RngStream rn_x1 = stream(cfg, static_cast<std::uint32_t>(i), kX1Noise);
        for (Eigen::Index j = 0; j < g; ++j)
            out.x1.values(static_cast<Eigen::Index>(i), j) =
                ds.x1_latent(static_cast<Eigen::Index>(i), j) + ds.sigma_x1 * rn_x1.next_normal();
    }
    return ds;
}

std::vector<Table1Row> run_table1(const SimConfig& cfg, std::span<const int> n_list, int reps,
                                  std::span<const std::pair<double, double>> rho_grid,
                                  const model::FitOptions& opts, int threads) {
    if (reps < 1) throw ConfigError("run_table1: reps must be >= 1");
    if (rho_grid.empty()) throw ConfigError("run_table1: empty rho grid");

    model::FitOptions inner = opts;
    inner.threads = 1;

    std::vector<Table1Row> rows;
    for (int n : n_list) {
        std::vector<double> rep_npe(static_cast<std::size_t>(reps));
        parallel_for(static_cast<std::size_t>(reps), threads, [&](std::size_t rep) {
            SimConfig c = cfg;
            c.n = n;
            c.replication = static_cast<std::uint32_t>(rep);
            const SimulatedDataset ds = generate_dataset(c);
            const model::SurfaceSet surfaces = model::estimate_surfaces(ds.observed, inner);

            double best = std::numeric_limits<double>::infinity();
            for (const auto& rho : rho_grid) {
                const model::ModelFit fit =
                    model::fit_with_surfaces(surfaces, c.lags1, c.lags2, rho, inner);
                const auto pred = model::predict_at_observations(fit, ds.observed, 1);
                std::vector<double> p, latent;
                for (std::size_t i = 0; i < pred.size(); ++i)
                    for (std::size_t j = 0; j < pred[i].size(); ++j) {
                        p.push_back(pred[i][j]);
                        latent.push_back(ds.latent_y_at(i, ds.observed.y[i].times[j]));
                    }
                best = std::min(best, selection::npe(p, latent).value);
            }
            rep_npe[rep] = best;
        });

        Table1Row row;
        row.n = n;
        row.reps = reps;
        row.mean_npe = std::accumulate(rep_npe.begin(), rep_npe.end(), 0.0) / reps;
        double ss = 0.0;
        for (double v : rep_npe) ss += (v - row.mean_npe) * (v - row.mean_npe);
        row.se_npe = reps > 1 ? std::sqrt(ss / (reps - 1) / reps) : 0.0;
        rows.push_back(row);
    }
    return rows;
}

LagExperimentResult run_lag_experiment(const SimConfig& cfg, std::span<const double> uppers,
                                       int reps, std::span<const std::pair<double, double>> rho_grid,
                                       int k_folds, const model::FitOptions& opts, int threads) {
    if (reps < 1) throw ConfigError("run_lag_experiment: reps must be >= 1");
    if (uppers.empty()) throw ConfigError("run_lag_experiment: no upper-lag candidates");

    model::FitOptions inner = opts;
    inner.threads = 1;

    std::vector<std::pair<model::LagWindow, model::LagWindow>> candidates;
    for (double u : uppers)
        candidates.emplace_back(model::LagWindow{cfg.lags1.lower, u},
                                model::LagWindow{cfg.lags2.lower, u});

    LagExperimentResult out;
    out.selected_upper.resize(static_cast<std::size_t>(reps));
    parallel_for(static_cast<std::size_t>(reps), threads, [&](std::size_t rep) {
        SimConfig c = cfg;
        c.replication = static_cast<std::uint32_t>(rep);
        const SimulatedDataset ds = generate_dataset(c);
        const std::uint64_t fold_seed = cfg.seed + 1000003ull * (rep + 1);
        const selection::SelectionResult sel = selection::select_over_candidates(
            ds.observed, candidates, rho_grid, k_folds, fold_seed, inner);
        out.selected_upper[rep] = sel.best().lags1.upper;
    });
    for (double u : out.selected_upper)
        if (std::abs(u - cfg.lags1.upper) < 1e-12) ++out.hits;
    return out;
}

}  // namespace lagflm::sim
