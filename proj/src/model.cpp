#include "lagflm/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "lagflm/grid.hpp"
#include "lagflm/parallel.hpp"

namespace lagflm::model {

namespace {

constexpr double kTimeTol = 1e-9;

// Quadrature rule over a lag window together with the basis values at its
// nodes; every induced integral is a weighted sum over these nodes.
struct WindowQuadrature {
    basis::QuadratureRule rule;
    Eigen::MatrixXd basis_nodes;  // K x Q

    WindowQuadrature(const basis::BasisSystem& b, int nodes)
        : rule(basis::gauss_legendre(nodes, b.interval())), basis_nodes(b.eval_matrix(rule.nodes)) {}

    int node_count() const { return static_cast<int>(rule.nodes.size()); }

    // integral of B_k(s) f(t - s) ds over the window, for all k.
    template <typename F>
    Eigen::VectorXd induced(F&& f, double t) const {
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(basis_nodes.rows());
        for (int q = 0; q < node_count(); ++q) {
            const auto uq = static_cast<std::size_t>(q);
            acc += (rule.weights[uq] * f(t - rule.nodes[uq])) * basis_nodes.col(q);
        }
        return acc;
    }
};

double check_valid_time(double t, LagWindow l1, LagWindow l2) {
    const double lo = std::max(l1.upper, l2.upper);
    if (t < lo - kTimeTol || t > 1.0 + kTimeTol)
        throw OutOfValidRangeError("time t = " + std::to_string(t) +
                                   " outside the valid interval [" + std::to_string(lo) + ", 1]");
    return lo;
}

InducedCovariances induced_impl(const CovarianceViews& cov, const WindowQuadrature& w1,
                                const WindowQuadrature& w2, LagWindow lags1, LagWindow lags2,
                                double t) {
    check_valid_time(t, lags1, lags2);
    InducedCovariances out;
    out.t = t;
    const int q1 = w1.node_count();
    const int q2 = w2.node_count();

    Eigen::MatrixXd g11(q1, q1), g22(q2, q2), g12(q1, q2);
    for (int q = 0; q < q1; ++q) {
        const double sq = t - w1.rule.nodes[static_cast<std::size_t>(q)];
        const double wq = w1.rule.weights[static_cast<std::size_t>(q)];
        for (int r = 0; r < q1; ++r) {
            const double sr = t - w1.rule.nodes[static_cast<std::size_t>(r)];
            g11(q, r) = wq * w1.rule.weights[static_cast<std::size_t>(r)] * cov.x1->at(sq, sr);
        }
        for (int r = 0; r < q2; ++r) {
            const double sr = t - w2.rule.nodes[static_cast<std::size_t>(r)];
            g12(q, r) = wq * w2.rule.weights[static_cast<std::size_t>(r)] * cov.x1x2->at(sq, sr);
        }
    }
    for (int q = 0; q < q2; ++q) {
        const double sq = t - w2.rule.nodes[static_cast<std::size_t>(q)];
        const double wq = w2.rule.weights[static_cast<std::size_t>(q)];
        for (int r = 0; r < q2; ++r) {
            const double sr = t - w2.rule.nodes[static_cast<std::size_t>(r)];
            g22(q, r) = wq * w2.rule.weights[static_cast<std::size_t>(r)] * cov.x2->at(sq, sr);
        }
    }

    out.c11 = w1.basis_nodes * g11 * w1.basis_nodes.transpose();
    out.c11 = 0.5 * (out.c11 + out.c11.transpose()).eval();
    out.c22 = w2.basis_nodes * g22 * w2.basis_nodes.transpose();
    out.c22 = 0.5 * (out.c22 + out.c22.transpose()).eval();
    out.c12 = w1.basis_nodes * g12 * w2.basis_nodes.transpose();
    out.c21 = out.c12.transpose();

    out.c1y = w1.induced([&](double s) { return cov.x1y->at(s, t); }, t);
    out.c2y = w2.induced([&](double s) { return cov.x2y->at(s, t); }, t);
    return out;
}

Eigen::VectorXd solve_regularized(const InducedCovariances& ic, double rho1_over_n,
                                  double rho2_over_n) {
    const Eigen::Index k1 = ic.c11.rows();
    const Eigen::Index k2 = ic.c22.rows();
    Eigen::MatrixXd system(k1 + k2, k1 + k2);
    system.topLeftCorner(k1, k1) = ic.c11;
    system.topRightCorner(k1, k2) = ic.c12;
    system.bottomLeftCorner(k2, k1) = ic.c21;
    system.bottomRightCorner(k2, k2) = ic.c22;
    system.diagonal().head(k1).array() += rho1_over_n;
    system.diagonal().tail(k2).array() += rho2_over_n;

    Eigen::VectorXd rhs(k1 + k2);
    rhs.head(k1) = ic.c1y;
    rhs.tail(k2) = ic.c2y;

    if (!system.allFinite() || !rhs.allFinite())
        throw NumericError("regularized system has non-finite entries at t = " + std::to_string(ic.t));
    // LDLT: the blocks are symmetric but smoothed estimates may dip slightly
    // indefinite before the ridge is added.
    Eigen::LDLT<Eigen::MatrixXd> ldlt(system);
    if (ldlt.info() != Eigen::Success)
        throw NumericError("regularized solve failed at t = " + std::to_string(ic.t));
    return ldlt.solve(rhs);
}

// Restrict a grid to [lo, hi]; falls back to the two nearest points when the
// window does not straddle any grid point.
std::vector<double> sub_grid(std::span<const double> grid, double lo, double hi) {
    std::vector<double> out;
    for (double v : grid)
        if (v >= lo - kTimeTol && v <= hi + kTimeTol) out.push_back(v);
    if (out.size() >= 2) return out;
    const double mid = 0.5 * (lo + hi);
    std::size_t j = cell_index(grid, mid);
    return {grid[j], grid[std::min(j + 1, grid.size() - 1)]};
}

struct ObsRange {
    double lo = 1.0;
    double hi = 0.0;
    std::size_t count = 0;

    void add(const SparseFunctionalSample& s) {
        if (s.size() == 0) return;
        lo = std::min(lo, s.times.front());
        hi = std::max(hi, s.times.back());
        count += s.size();
    }
    bool empty() const { return count == 0; }
};

// Curve recovery for one subject relative to fitted means / eigensystem.
// Missing observations fall back to the mean curve (zero once centered).
class SubjectRecovery {
public:
    SubjectRecovery(std::span<const double> grid, std::span<const double> mean1,
                    std::span<const double> mean2, const fpca::Eigensystem& eig, int truncation,
                    const smoothing::SmoothingConfig& cfg, const SparseFunctionalSample& x1_obs,
                    const SparseFunctionalSample& x2_obs)
        : grid_(grid), mean1_(mean1), mean2_(mean2), eig_(&eig) {
        if (x1_obs.size() >= 2) {
            const double range = x1_obs.times.back() - x1_obs.times.front();
            if (range > 0.0) {
                const double bw = smoothing::resolve_bandwidth_recovery(cfg, range, x1_obs.size());
                smoother_.emplace(x1_obs.times, x1_obs.values, bw, cfg.kernel);
            }
        }
        if (!smoother_ && x1_obs.size() >= 1) constant_x1_ = x1_obs.values.front();
        if (truncation > 0 && x2_obs.size() > 0) {
            SparseFunctionalSample centered = x2_obs;
            for (std::size_t j = 0; j < centered.size(); ++j)
                centered.values[j] -= interp1(grid_, mean2_, centered.times[j]);
            scores_ = fpca::blup_scores(eig, centered, truncation);
        }
    }

    double x1_centered(double v) const {
        const double mean = interp1(grid_, mean1_, v);
        if (smoother_) return (*smoother_)(v)-mean;
        if (constant_x1_) return *constant_x1_ - mean;
        return 0.0;
    }

    double x2_centered(double v) const {
        if (!scores_) return 0.0;
        double acc = 0.0;
        for (int l = 0; l < scores_->truncation; ++l)
            acc += scores_->scores[l] * eig_->eigenfunction_at(static_cast<std::size_t>(l), v);
        return acc;
    }

private:
    std::span<const double> grid_;
    std::span<const double> mean1_;
    std::span<const double> mean2_;
    const fpca::Eigensystem* eig_;
    std::optional<smoothing::LocalLinear1D> smoother_;
    std::optional<double> constant_x1_;
    std::optional<fpca::ScoreEstimate> scores_;
};

double predict_one(const ModelFit& fit, const WindowQuadrature& w1, const WindowQuadrature& w2,
                   const SubjectRecovery& rec, double t) {
    const Eigen::VectorXd z1 = w1.induced([&](double v) { return rec.x1_centered(v); }, t);
    const Eigen::VectorXd z2 = w2.induced([&](double v) { return rec.x2_centered(v); }, t);
    return fit.intercept_at(t) + z1.dot(fit.b1_at(t)) + z2.dot(fit.b2_at(t));
}

}  // namespace

CovarianceViews views(const SurfaceSet& s) {
    return {&s.cov_x1, &s.cov_x2, &s.cov_x1x2, &s.cov_x1y, &s.cov_x2y};
}

InducedCovariances induced_covariance_matrices(const CovarianceViews& cov,
                                               const basis::BasisSystem& basis1,
                                               const basis::BasisSystem& basis2, LagWindow lags1,
                                               LagWindow lags2, double t, int quad_nodes) {
    lags1.validate();
    lags2.validate();
    const WindowQuadrature w1(basis1, quad_nodes);
    const WindowQuadrature w2(basis2, quad_nodes);
    return induced_impl(cov, w1, w2, lags1, lags2, t);
}

double ModelFit::intercept_at(double t) const { return interp1(eval_grid, intercept, t); }

Eigen::VectorXd ModelFit::b1_at(double t) const {
    const std::size_t j = cell_index(eval_grid, t);
    const double w = std::clamp((t - eval_grid[j]) / (eval_grid[j + 1] - eval_grid[j]), 0.0, 1.0);
    return (1.0 - w) * b1.col(static_cast<Eigen::Index>(j)) +
           w * b1.col(static_cast<Eigen::Index>(j + 1));
}

Eigen::VectorXd ModelFit::b2_at(double t) const {
    const std::size_t j = cell_index(eval_grid, t);
    const double w = std::clamp((t - eval_grid[j]) / (eval_grid[j + 1] - eval_grid[j]), 0.0, 1.0);
    return (1.0 - w) * b2.col(static_cast<Eigen::Index>(j)) +
           w * b2.col(static_cast<Eigen::Index>(j + 1));
}

std::vector<double> estimate_intercept(std::span<const SparseFunctionalSample> responses,
                                       const smoothing::SmoothingConfig& cfg,
                                       std::span<const double> eval_grid) {
    std::vector<double> t, v;
    for (const auto& s : responses) {
        t.insert(t.end(), s.times.begin(), s.times.end());
        v.insert(v.end(), s.values.begin(), s.values.end());
    }
    if (t.empty()) throw ShapeError("estimate_intercept: no response observations");
    return smoothing::local_linear_1d(t, v, cfg, eval_grid);
}

SurfaceSet estimate_surfaces(const DataBundle& data, const FitOptions& opts) {
    const std::size_t n = data.subjects();
    if (n < 2) throw ShapeError("estimate_surfaces: needs at least 2 subjects");

    SurfaceSet out;
    out.n_subjects = static_cast<int>(n);
    out.domain_grid = linspace(0.0, 1.0, static_cast<std::size_t>(opts.surface_grid_size));

    // Mean structure first; all covariances are built from centered data.
    out.beta0 = estimate_intercept(data.y, opts.smoothing, out.domain_grid);

    std::vector<double> x2_t, x2_v;
    for (const auto& s : data.x2) {
        x2_t.insert(x2_t.end(), s.times.begin(), s.times.end());
        x2_v.insert(x2_v.end(), s.values.begin(), s.values.end());
    }
    if (x2_t.empty()) throw ShapeError("estimate_surfaces: no X2 observations");
    out.mean_x2 = smoothing::local_linear_1d(x2_t, x2_v, opts.smoothing, out.domain_grid);

    // Dense predictor: cross-sectional means per grid point.
    std::size_t n_x1 = 0;
    for (char h : data.has_x1) n_x1 += h ? 1 : 0;
    if (n_x1 < 2) throw ShapeError("estimate_surfaces: needs at least 2 subjects with X1 records");
    DenseFunctionalPanel centered_panel;
    centered_panel.grid = data.x1.grid;
    centered_panel.values.resize(static_cast<Eigen::Index>(n_x1),
                                 static_cast<Eigen::Index>(data.x1.grid.size()));
    {
        Eigen::RowVectorXd col_mean = Eigen::RowVectorXd::Zero(data.x1.values.cols());
        for (std::size_t i = 0; i < n; ++i)
            if (data.has_x1[i]) col_mean += data.x1.values.row(static_cast<Eigen::Index>(i));
        col_mean /= static_cast<double>(n_x1);
        Eigen::Index r = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (data.has_x1[i])
                centered_panel.values.row(r++) =
                    data.x1.values.row(static_cast<Eigen::Index>(i)) - col_mean;
        out.mean_x1.resize(out.domain_grid.size());
        std::vector<double> cm(col_mean.begin(), col_mean.end());
        for (std::size_t j = 0; j < out.domain_grid.size(); ++j)
            out.mean_x1[j] = interp1(data.x1.grid, cm, out.domain_grid[j]);
    }

    // Centered copies of the sparse variables.
    std::vector<SparseFunctionalSample> yc(data.y.begin(), data.y.end());
    for (auto& s : yc)
        for (std::size_t j = 0; j < s.size(); ++j)
            s.values[j] -= interp1(out.domain_grid, out.beta0, s.times[j]);
    std::vector<SparseFunctionalSample> x2c(data.x2.begin(), data.x2.end());
    for (auto& s : x2c)
        for (std::size_t j = 0; j < s.size(); ++j)
            s.values[j] -= interp1(out.domain_grid, out.mean_x2, s.times[j]);

    ObsRange y_range, x2_range;
    for (const auto& s : yc) y_range.add(s);
    for (const auto& s : x2c) x2_range.add(s);
    if (y_range.empty()) throw ShapeError("estimate_surfaces: no response observations");

    const std::vector<double> grid_x2 = sub_grid(out.domain_grid, x2_range.lo, x2_range.hi);
    const std::vector<double> grid_y = sub_grid(out.domain_grid, y_range.lo, y_range.hi);
    const std::vector<double> grid_x1 =
        sub_grid(out.domain_grid, data.x1.grid.front(), data.x1.grid.back());

    // Centered X1 rows as samples, aligned with the full subject index.
    std::vector<SparseFunctionalSample> x1_samples(n);
    {
        Eigen::Index r = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!data.has_x1[i]) continue;
            x1_samples[i].times = data.x1.grid;
            x1_samples[i].values.assign(centered_panel.values.row(r).begin(),
                                        centered_panel.values.row(r).end());
            ++r;
        }
    }

    out.cov_x1 = smoothing::dense_covariance(centered_panel, opts.smoothing);
    out.cov_x2 = smoothing::sparse_covariance(x2c, opts.smoothing, grid_x2, opts.threads);
    out.cov_x1x2 =
        smoothing::cross_covariance(x1_samples, x2c, opts.smoothing, grid_x1, grid_x2, opts.threads);
    out.cov_x1y =
        smoothing::cross_covariance(x1_samples, yc, opts.smoothing, grid_x1, grid_y, opts.threads);
    out.cov_x2y = smoothing::cross_covariance(x2c, yc, opts.smoothing, grid_x2, grid_y, opts.threads);

    out.noise_x2 = smoothing::estimate_noise_variance(
        out.cov_x2.raw_diagonal, out.cov_x2.smoothed_diagonal, out.cov_x2.s_grid);

    out.eig_x2 = fpca::eigendecompose(out.cov_x2, out.noise_x2);
    return out;
}

ModelFit fit_with_surfaces(const SurfaceSet& surfaces, LagWindow lags1, LagWindow lags2,
                           std::pair<double, double> rho, const FitOptions& opts) {
    lags1.validate();
    lags2.validate();
    if (!(rho.first > 0.0 && rho.second > 0.0))
        throw ConfigError("regularization parameters must be positive");
    const double valid_lower = std::max(lags1.upper, lags2.upper);
    if (!(valid_lower < 1.0))
        throw ConfigError("empty valid interval: max upper lag " + std::to_string(valid_lower) +
                          " must be < 1");
    if (opts.eval_grid_size < 2) throw ConfigError("eval grid needs at least 2 points");

    ModelFit fit(basis::make_bspline_basis(opts.basis_order, opts.interior_knots, lags1.as_interval()),
                 basis::make_bspline_basis(opts.basis_order, opts.interior_knots, lags2.as_interval()));
    fit.lags1 = lags1;
    fit.lags2 = lags2;
    fit.rho1 = rho.first;
    fit.rho2 = rho.second;
    fit.valid_lower = valid_lower;
    fit.domain_grid = surfaces.domain_grid;
    fit.mean_x1 = surfaces.mean_x1;
    fit.mean_x2 = surfaces.mean_x2;
    fit.beta0 = surfaces.beta0;
    fit.eig_x2 = surfaces.eig_x2;
    fit.noise_x2 = surfaces.noise_x2;
    fit.fve = opts.fve;
    fit.quad_nodes = opts.quad_nodes;
    fit.smoothing = opts.smoothing;
    fit.truncation =
        surfaces.eig_x2.components() == 0 ? 0 : fpca::select_truncation(surfaces.eig_x2, opts.fve);

    fit.eval_grid = linspace(valid_lower, 1.0, static_cast<std::size_t>(opts.eval_grid_size));
    fit.intercept.resize(fit.eval_grid.size());
    for (std::size_t j = 0; j < fit.eval_grid.size(); ++j)
        fit.intercept[j] = interp1(surfaces.domain_grid, surfaces.beta0, fit.eval_grid[j]);

    const WindowQuadrature w1(fit.basis1, opts.quad_nodes);
    const WindowQuadrature w2(fit.basis2, opts.quad_nodes);
    const CovarianceViews cov = views(surfaces);
    const double n = static_cast<double>(surfaces.n_subjects);

    fit.b1.resize(fit.basis1.size(), static_cast<Eigen::Index>(fit.eval_grid.size()));
    fit.b2.resize(fit.basis2.size(), static_cast<Eigen::Index>(fit.eval_grid.size()));
    parallel_for(fit.eval_grid.size(), opts.threads, [&](std::size_t j) {
        const InducedCovariances ic = induced_impl(cov, w1, w2, lags1, lags2, fit.eval_grid[j]);
        const Eigen::VectorXd b = solve_regularized(ic, rho.first / n, rho.second / n);
        fit.b1.col(static_cast<Eigen::Index>(j)) = b.head(fit.basis1.size());
        fit.b2.col(static_cast<Eigen::Index>(j)) = b.tail(fit.basis2.size());
    });
    return fit;
}

ModelFit fit(const DataBundle& data, LagWindow lags1, LagWindow lags2,
             std::pair<double, double> rho, const FitOptions& opts) {
    const SurfaceSet surfaces = estimate_surfaces(data, opts);
    return fit_with_surfaces(surfaces, lags1, lags2, rho, opts);
}

Eigen::MatrixXd coefficient_surface(const ModelFit& fit, int which, std::span<const double> s_grid,
                                    std::span<const double> t_grid) {
    if (which != 1 && which != 2) throw ConfigError("coefficient_surface: predictor index must be 1 or 2");
    const basis::BasisSystem& b = which == 1 ? fit.basis1 : fit.basis2;
    Eigen::MatrixXd out(static_cast<Eigen::Index>(s_grid.size()),
                        static_cast<Eigen::Index>(t_grid.size()));
    for (std::size_t jt = 0; jt < t_grid.size(); ++jt) {
        const double t = t_grid[jt];
        if (t < fit.valid_lower - kTimeTol || t > 1.0 + kTimeTol)
            throw OutOfValidRangeError("coefficient_surface: t = " + std::to_string(t) +
                                       " outside [" + std::to_string(fit.valid_lower) + ", 1]");
        const Eigen::VectorXd bt = which == 1 ? fit.b1_at(t) : fit.b2_at(t);
        for (std::size_t is = 0; is < s_grid.size(); ++is)
            out(static_cast<Eigen::Index>(is), static_cast<Eigen::Index>(jt)) =
                b.eval(s_grid[is]).dot(bt);
    }
    return out;
}

std::vector<double> predict(const ModelFit& fit, const SparseFunctionalSample& x1_obs,
                            const SparseFunctionalSample& x2_obs,
                            std::span<const double> eval_times) {
    for (double t : eval_times) check_valid_time(t, fit.lags1, fit.lags2);
    const WindowQuadrature w1(fit.basis1, fit.quad_nodes);
    const WindowQuadrature w2(fit.basis2, fit.quad_nodes);
    const SubjectRecovery rec(fit.domain_grid, fit.mean_x1, fit.mean_x2, fit.eig_x2, fit.truncation,
                              fit.smoothing, x1_obs, x2_obs);
    std::vector<double> out(eval_times.size());
    for (std::size_t j = 0; j < eval_times.size(); ++j)
        out[j] = predict_one(fit, w1, w2, rec, eval_times[j]);
    return out;
}

std::vector<std::vector<double>> predict_at_observations(const ModelFit& fit,
                                                         const DataBundle& data, int threads) {
    const WindowQuadrature w1(fit.basis1, fit.quad_nodes);
    const WindowQuadrature w2(fit.basis2, fit.quad_nodes);
    std::vector<std::vector<double>> out(data.subjects());
    parallel_for(data.subjects(), threads, [&](std::size_t i) {
        SparseFunctionalSample x1_obs;
        if (data.has_x1[i]) {
            x1_obs.times = data.x1.grid;
            x1_obs.values.assign(data.x1.values.row(static_cast<Eigen::Index>(i)).begin(),
                                 data.x1.values.row(static_cast<Eigen::Index>(i)).end());
        }
        const SubjectRecovery rec(fit.domain_grid, fit.mean_x1, fit.mean_x2, fit.eig_x2,
                                  fit.truncation, fit.smoothing, x1_obs, data.x2[i]);
        const auto& times = data.y[i].times;
        auto& row = out[i];
        row.assign(times.size(), std::numeric_limits<double>::quiet_NaN());
        for (std::size_t j = 0; j < times.size(); ++j) {
            if (times[j] < fit.valid_lower - kTimeTol || times[j] > 1.0 + kTimeTol) continue;
            row[j] = predict_one(fit, w1, w2, rec, times[j]);
        }
    });
    return out;
}

Eigen::VectorXd ridge_solve_blocks(const Eigen::MatrixXd& z, const Eigen::VectorXd& y, double rho1,
                                   double rho2, int k1, int k2) {
    if (z.cols() != k1 + k2 || z.rows() != y.size())
        throw ShapeError("ridge_solve_blocks: design shape mismatch");
    Eigen::MatrixXd m = z.transpose() * z;
    m.diagonal().head(k1).array() += rho1;
    m.diagonal().tail(k2).array() += rho2;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(m);
    if (ldlt.info() != Eigen::Success) throw NumericError("ridge_solve_blocks: factorization failed");
    return ldlt.solve(z.transpose() * y);
}

OracleCoefficients fit_common_grid_oracle(const CommonGridData& data, LagWindow lags1,
                                          LagWindow lags2, std::pair<double, double> rho,
                                          int basis_order, int interior_knots, int quad_nodes) {
    lags1.validate();
    lags2.validate();
    const auto n = data.y.rows();
    if (n < 1 || data.x1.rows() != n || data.x2.rows() != n)
        throw ShapeError("fit_common_grid_oracle: subject counts disagree");

    const basis::BasisSystem b1 =
        basis::make_bspline_basis(basis_order, interior_knots, lags1.as_interval());
    const basis::BasisSystem b2 =
        basis::make_bspline_basis(basis_order, interior_knots, lags2.as_interval());
    const WindowQuadrature w1(b1, quad_nodes);
    const WindowQuadrature w2(b2, quad_nodes);
    const double valid_lower = std::max(lags1.upper, lags2.upper);

    OracleCoefficients out;
    std::vector<std::size_t> kept;
    for (std::size_t j = 0; j < data.times.size(); ++j)
        if (data.times[j] >= valid_lower - kTimeTol && data.times[j] <= 1.0 + kTimeTol) {
            kept.push_back(j);
            out.times.push_back(data.times[j]);
        }

    out.b1.resize(b1.size(), static_cast<Eigen::Index>(kept.size()));
    out.b2.resize(b2.size(), static_cast<Eigen::Index>(kept.size()));

    const std::span<const double> grid(data.curve_grid);
    for (std::size_t c = 0; c < kept.size(); ++c) {
        const double t = data.times[kept[c]];
        Eigen::MatrixXd z(n, b1.size() + b2.size());
        for (Eigen::Index i = 0; i < n; ++i) {
            const Eigen::VectorXd x1_row = data.x1.row(i);
            const Eigen::VectorXd x2_row = data.x2.row(i);
            const std::span<const double> v1(x1_row.data(), static_cast<std::size_t>(x1_row.size()));
            const std::span<const double> v2(x2_row.data(), static_cast<std::size_t>(x2_row.size()));
            z.row(i).head(b1.size()) =
                w1.induced([&](double s) { return interp1(grid, v1, s); }, t).transpose();
            z.row(i).tail(b2.size()) =
                w2.induced([&](double s) { return interp1(grid, v2, s); }, t).transpose();
        }
        const Eigen::VectorXd sol = ridge_solve_blocks(
            z, data.y.col(static_cast<Eigen::Index>(kept[c])), rho.first, rho.second,
            b1.size(), b2.size());
        out.b1.col(static_cast<Eigen::Index>(c)) = sol.head(b1.size());
        out.b2.col(static_cast<Eigen::Index>(c)) = sol.tail(b2.size());
    }
    return out;
}

}  // namespace lagflm::model
