#include "lagflm/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>

#include "lagflm/parallel.hpp"

namespace lagflm::smoothing {

namespace {

double kernel_value(KernelFamily k, double v) {
    if (k == KernelFamily::epanechnikov) {
        const double a = 1.0 - v * v;
        return a > 0.0 ? 0.75 * a : 0.0;
    }
    return std::exp(-0.5 * v * v);
}

// Window radius in bandwidth units (the Gaussian tail is cut for pair search).
double support_radius(KernelFamily k) {
    return k == KernelFamily::epanechnikov ? 1.0 : 5.0;
}

}  // namespace

double resolve_bandwidth_1d(const SmoothingConfig& cfg, double range, std::size_t n_points) {
    if (cfg.bandwidth_1d > 0.0) return cfg.bandwidth_1d;
    const double n = std::max<std::size_t>(n_points, 2);
    return cfg.factor_1d * range * std::pow(static_cast<double>(n), -0.2);
}

double resolve_bandwidth_2d(const SmoothingConfig& cfg, double range, std::size_t n_pairs) {
    if (cfg.bandwidth_2d > 0.0) return cfg.bandwidth_2d;
    const double n = std::max<std::size_t>(n_pairs, 2);
    return cfg.factor_2d * range * std::pow(static_cast<double>(n), -1.0 / 6.0);
}

double resolve_bandwidth_recovery(const SmoothingConfig& cfg, double range, std::size_t n_points) {
    if (cfg.bandwidth_1d > 0.0) return cfg.bandwidth_1d;
    const double n = std::max<std::size_t>(n_points, 2);
    return cfg.factor_recovery * range * std::pow(static_cast<double>(n), -0.2);
}

LocalLinear1D::LocalLinear1D(std::span<const double> times, std::span<const double> values,
                             double bandwidth, KernelFamily kernel)
    : bandwidth_(bandwidth), kernel_(kernel) {
    if (times.size() != values.size() || times.empty())
        throw ShapeError("local linear smoother: empty or mismatched inputs");
    std::vector<std::size_t> idx(times.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });
    times_.reserve(times.size());
    values_.reserve(times.size());
    for (std::size_t i : idx) {
        if (!std::isfinite(times[i]) || !std::isfinite(values[i]))
            throw NumericError("local linear smoother: non-finite input point");
        times_.push_back(times[i]);
        values_.push_back(values[i]);
    }
    range_ = times_.back() - times_.front();
    if (!(bandwidth_ > 0.0)) throw ConfigError("local linear smoother: bandwidth must be positive");
}

double LocalLinear1D::operator()(double t) const {
    const double radius_factor = support_radius(kernel_);
    double b = bandwidth_;
    // Widen the window until the weighted design is non-degenerate. Local
    // linear fits reproduce affine data exactly for any such window.
    for (int attempt = 0; attempt < 64; ++attempt) {
        const double radius = b * radius_factor;
        const auto lo = std::lower_bound(times_.begin(), times_.end(), t - radius);
        const auto hi = std::upper_bound(times_.begin(), times_.end(), t + radius);
        double s0 = 0, s1 = 0, s2 = 0, t0 = 0, t1 = 0;
        for (auto it = lo; it != hi; ++it) {
            const std::size_t i = static_cast<std::size_t>(it - times_.begin());
            const double d = times_[i] - t;
            const double w = kernel_value(kernel_, d / b);
            if (w <= 0.0) continue;
            s0 += w;
            s1 += w * d;
            s2 += w * d * d;
            t0 += w * values_[i];
            t1 += w * d * values_[i];
        }
        const double det = s0 * s2 - s1 * s1;
        if (s0 > 0.0 && det > 1e-10 * (s0 * s2 + s1 * s1 + 1e-300)) {
            return (s2 * t0 - s1 * t1) / det;
        }
        if (b >= 4.0 * (range_ + bandwidth_)) break;
        b *= 2.0;
    }
    throw SingularDesignError("local linear fit degenerate at t = " + std::to_string(t) +
                              " (all observation times coincide?)");
}

std::vector<double> local_linear_1d(std::span<const double> times, std::span<const double> values,
                                    const SmoothingConfig& cfg, std::span<const double> eval_grid) {
    if (times.empty()) throw ShapeError("local_linear_1d: no input points");
    const auto [mn, mx] = std::minmax_element(times.begin(), times.end());
    const double range = *mx - *mn;
    if (!(range > 0.0))
        throw SingularDesignError("local_linear_1d: all points share one time " + std::to_string(*mn));
    const double b = resolve_bandwidth_1d(cfg, range, times.size());
    LocalLinear1D fit(times, values, b, cfg.kernel);
    std::vector<double> out(eval_grid.size());
    for (std::size_t j = 0; j < eval_grid.size(); ++j) out[j] = fit(eval_grid[j]);
    return out;
}

CovarianceSurface dense_covariance(const DenseFunctionalPanel& panel, const SmoothingConfig& cfg) {
    const auto n = panel.values.rows();
    const auto m = panel.values.cols();
    if (n < 2) throw ShapeError("dense_covariance: needs at least 2 subjects");
    if (static_cast<std::size_t>(m) != panel.grid.size())
        throw ShapeError("dense_covariance: panel grid/value size mismatch");

    // Subject-averaged raw product matrix; the kernel average only has to
    // iron out the measurement-error roughness at grid-cell scale.
    Eigen::MatrixXd raw = (panel.values.transpose() * panel.values) / static_cast<double>(n);

    const double spacing = panel.spacing();
    const double b = cfg.bandwidth_2d > 0.0 ? cfg.bandwidth_2d : cfg.factor_2d * 2.5 * spacing;

    Eigen::MatrixXd smoother = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index a = 0; a < m; ++a) {
        double total = 0.0;
        for (Eigen::Index j = 0; j < m; ++j) {
            const double w = kernel_value(cfg.kernel, (panel.grid[static_cast<std::size_t>(a)] -
                                                       panel.grid[static_cast<std::size_t>(j)]) / b);
            smoother(a, j) = w;
            total += w;
        }
        smoother.row(a) /= total;
    }

    CovarianceSurface out;
    out.s_grid = panel.grid;
    out.u_grid = panel.grid;
    out.bandwidth = b;
    out.undersmoothed = b < spacing;
    Eigen::MatrixXd c = smoother * raw * smoother.transpose();
    out.values = 0.5 * (c + c.transpose());
    if (!out.values.allFinite()) throw NumericError("dense_covariance: non-finite surface value");
    return out;
}

namespace {

// Scattered raw products with a cell index sized to the kernel support, so a
// surface fit at one point only visits a 2x2..3x3 block of cells. Pairs keep
// their insertion order inside each cell, which pins the summation order.
class PlaneFitEngine {
public:
    PlaneFitEngine(std::vector<double> s, std::vector<double> u, std::vector<double> r,
                   double bandwidth, KernelFamily kernel)
        : s_(std::move(s)), u_(std::move(u)), r_(std::move(r)), bandwidth_(bandwidth),
          kernel_(kernel), radius_(bandwidth * support_radius(kernel)) {
        const auto [s_mn, s_mx] = std::minmax_element(s_.begin(), s_.end());
        const auto [u_mn, u_mx] = std::minmax_element(u_.begin(), u_.end());
        s_lo_ = *s_mn;
        u_lo_ = *u_mn;
        const double s_range = std::max(*s_mx - s_lo_, 1e-12);
        const double u_range = std::max(*u_mx - u_lo_, 1e-12);
        ncs_ = std::clamp(static_cast<int>(s_range / radius_), 1, 512);
        ncu_ = std::clamp(static_cast<int>(u_range / radius_), 1, 512);
        cell_s_ = s_range / ncs_;
        cell_u_ = u_range / ncu_;

        const std::size_t n = s_.size();
        std::vector<std::uint32_t> cell(n);
        std::vector<std::uint32_t> counts(static_cast<std::size_t>(ncs_) * ncu_ + 1, 0);
        for (std::size_t p = 0; p < n; ++p) {
            cell[p] = static_cast<std::uint32_t>(cell_of(s_[p], u_[p]));
            ++counts[cell[p] + 1];
        }
        for (std::size_t c = 1; c < counts.size(); ++c) counts[c] += counts[c - 1];
        start_ = counts;
        order_.resize(n);
        std::vector<std::uint32_t> cursor(start_.begin(), start_.end() - 1);
        for (std::size_t p = 0; p < n; ++p) order_[cursor[cell[p]]++] = static_cast<std::uint32_t>(p);
    }

    double bandwidth() const { return bandwidth_; }

    double alpha0(double s, double u) const {
        double m00 = 0, m10 = 0, m01 = 0, m20 = 0, m11 = 0, m02 = 0;
        double t0 = 0, t1 = 0, t2 = 0;
        std::size_t used = 0;

        const int is0 = clamp_cell((s - radius_ - s_lo_) / cell_s_, ncs_);
        const int is1 = clamp_cell((s + radius_ - s_lo_) / cell_s_, ncs_);
        const int ju0 = clamp_cell((u - radius_ - u_lo_) / cell_u_, ncu_);
        const int ju1 = clamp_cell((u + radius_ - u_lo_) / cell_u_, ncu_);
        const double inv_b = 1.0 / bandwidth_;

        for (int ic = is0; ic <= is1; ++ic) {
            for (int jc = ju0; jc <= ju1; ++jc) {
                const std::size_t c = static_cast<std::size_t>(ic) * ncu_ + static_cast<std::size_t>(jc);
                for (std::uint32_t k = start_[c]; k < start_[c + 1]; ++k) {
                    const std::uint32_t p = order_[k];
                    const double ds = (s_[p] - s) * inv_b;
                    if (ds <= -support_radius(kernel_) || ds >= support_radius(kernel_)) continue;
                    const double du = (u_[p] - u) * inv_b;
                    if (du <= -support_radius(kernel_) || du >= support_radius(kernel_)) continue;
                    const double w = kernel_value(kernel_, ds) * kernel_value(kernel_, du);
                    if (w <= 0.0) continue;
                    ++used;
                    const double wds = w * ds;
                    const double wdu = w * du;
                    m00 += w;
                    m10 += wds;
                    m01 += wdu;
                    m20 += wds * ds;
                    m11 += wds * du;
                    m02 += wdu * du;
                    t0 += w * r_[p];
                    t1 += wds * r_[p];
                    t2 += wdu * r_[p];
                }
            }
        }

        if (used < 3)
            throw RankDeficientFitError("surface fit has " + std::to_string(used) +
                                        " pairs in bandwidth at grid point (s=" + std::to_string(s) +
                                        ", u=" + std::to_string(u) + ")");
        Eigen::Matrix3d m;
        m << m00, m10, m01, m10, m20, m11, m01, m11, m02;
        Eigen::Vector3d rhs(t0, t1, t2);
        Eigen::FullPivLU<Eigen::Matrix3d> lu(m);
        if (!lu.isInvertible())
            throw RankDeficientFitError("degenerate surface fit at grid point (s=" +
                                        std::to_string(s) + ", u=" + std::to_string(u) + ")");
        return lu.solve(rhs)(0);
    }

    // Full local quadratic fit; removes the O(b^2) curvature bias that the
    // plane fit leaves in the diagonal (used by the noise-variance device).
    // Falls back to the plane fit when the quadratic design is singular.
    double quadratic_alpha0(double s, double u) const {
        Eigen::Matrix<double, 6, 6> m = Eigen::Matrix<double, 6, 6>::Zero();
        Eigen::Matrix<double, 6, 1> rhs = Eigen::Matrix<double, 6, 1>::Zero();
        std::size_t used = 0;

        const int is0 = clamp_cell((s - radius_ - s_lo_) / cell_s_, ncs_);
        const int is1 = clamp_cell((s + radius_ - s_lo_) / cell_s_, ncs_);
        const int ju0 = clamp_cell((u - radius_ - u_lo_) / cell_u_, ncu_);
        const int ju1 = clamp_cell((u + radius_ - u_lo_) / cell_u_, ncu_);
        const double inv_b = 1.0 / bandwidth_;

        for (int ic = is0; ic <= is1; ++ic) {
            for (int jc = ju0; jc <= ju1; ++jc) {
                const std::size_t c = static_cast<std::size_t>(ic) * ncu_ + static_cast<std::size_t>(jc);
                for (std::uint32_t k = start_[c]; k < start_[c + 1]; ++k) {
                    const std::uint32_t p = order_[k];
                    const double ds = (s_[p] - s) * inv_b;
                    if (ds <= -support_radius(kernel_) || ds >= support_radius(kernel_)) continue;
                    const double du = (u_[p] - u) * inv_b;
                    if (du <= -support_radius(kernel_) || du >= support_radius(kernel_)) continue;
                    const double w = kernel_value(kernel_, ds) * kernel_value(kernel_, du);
                    if (w <= 0.0) continue;
                    ++used;
                    Eigen::Matrix<double, 6, 1> x;
                    x << 1.0, ds, du, ds * ds, ds * du, du * du;
                    m.noalias() += w * x * x.transpose();
                    rhs.noalias() += (w * r_[p]) * x;
                }
            }
        }
        if (used < 6) return alpha0(s, u);
        Eigen::FullPivLU<Eigen::Matrix<double, 6, 6>> lu(m);
        if (!lu.isInvertible()) return alpha0(s, u);
        return lu.solve(rhs)(0);
    }

private:
    static int clamp_cell(double v, int nc) {
        return std::clamp(static_cast<int>(std::floor(v)), 0, nc - 1);
    }
    std::size_t cell_of(double s, double u) const {
        const int is = clamp_cell((s - s_lo_) / cell_s_, ncs_);
        const int ju = clamp_cell((u - u_lo_) / cell_u_, ncu_);
        return static_cast<std::size_t>(is) * ncu_ + static_cast<std::size_t>(ju);
    }

    std::vector<double> s_, u_, r_;
    double bandwidth_;
    KernelFamily kernel_;
    double radius_;
    double s_lo_ = 0, u_lo_ = 0, cell_s_ = 1, cell_u_ = 1;
    int ncs_ = 1, ncu_ = 1;
    std::vector<std::uint32_t> start_;
    std::vector<std::uint32_t> order_;
};

}  // namespace

CovarianceSurface sparse_covariance(std::span<const SparseFunctionalSample> samples,
                                    const SmoothingConfig& cfg, std::span<const double> out_grid,
                                    int threads) {
    std::vector<double> ps, pu, pr;
    std::vector<double> diag_t, diag_v;
    double t_min = 1.0, t_max = 0.0;
    for (const auto& s : samples) {
        const std::size_t m = s.size();
        for (std::size_t j = 0; j < m; ++j) {
            t_min = std::min(t_min, s.times[j]);
            t_max = std::max(t_max, s.times[j]);
            diag_t.push_back(s.times[j]);
            diag_v.push_back(s.values[j] * s.values[j]);
            for (std::size_t k = 0; k < m; ++k) {
                if (j == k) continue;  // same-index products carry the noise variance
                ps.push_back(s.times[j]);
                pu.push_back(s.times[k]);
                pr.push_back(s.values[j] * s.values[k]);
            }
        }
    }
    if (ps.size() < 3)
        throw RankDeficientFitError("sparse_covariance: only " + std::to_string(ps.size()) +
                                    " off-diagonal pairs available");

    const double b = resolve_bandwidth_2d(cfg, std::max(t_max - t_min, 1e-12), ps.size());
    PlaneFitEngine engine(std::move(ps), std::move(pu), std::move(pr), b, cfg.kernel);

    CovarianceSurface out;
    out.s_grid.assign(out_grid.begin(), out_grid.end());
    out.u_grid = out.s_grid;
    out.bandwidth = b;
    const auto g = static_cast<Eigen::Index>(out_grid.size());
    out.values.resize(g, g);

    parallel_for(static_cast<std::size_t>(g), threads, [&](std::size_t a) {
        const auto ia = static_cast<Eigen::Index>(a);
        for (Eigen::Index jb = ia; jb < g; ++jb)
            out.values(ia, jb) = engine.alpha0(out_grid[a], out_grid[static_cast<std::size_t>(jb)]);
    });
    for (Eigen::Index ia = 0; ia < g; ++ia)
        for (Eigen::Index jb = 0; jb < ia; ++jb) out.values(ia, jb) = out.values(jb, ia);

    // Same bandwidth as the surface so both sections of the product field are
    // attenuated alike; their difference then isolates the noise variance.
    SmoothingConfig diag_cfg = cfg;
    diag_cfg.bandwidth_1d = b;
    out.raw_diagonal = local_linear_1d(diag_t, diag_v, diag_cfg, out_grid);
    out.smoothed_diagonal.resize(out_grid.size());
    parallel_for(out_grid.size(), threads, [&](std::size_t a) {
        out.smoothed_diagonal[a] = engine.quadratic_alpha0(out_grid[a], out_grid[a]);
    });
    if (!out.values.allFinite()) throw NumericError("sparse_covariance: non-finite surface value");
    return out;
}

CovarianceSurface cross_covariance(std::span<const SparseFunctionalSample> a,
                                   std::span<const SparseFunctionalSample> b,
                                   const SmoothingConfig& cfg, std::span<const double> out_grid_s,
                                   std::span<const double> out_grid_u, int threads) {
    if (a.size() != b.size())
        throw ShapeError("cross_covariance: subject lists must be index-aligned");
    std::vector<double> ps, pu, pr;
    double s_min = 1.0, s_max = 0.0, u_min = 1.0, u_max = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].size() == 0 || b[i].size() == 0) continue;
        for (std::size_t j = 0; j < a[i].size(); ++j) {
            s_min = std::min(s_min, a[i].times[j]);
            s_max = std::max(s_max, a[i].times[j]);
            for (std::size_t k = 0; k < b[i].size(); ++k) {
                u_min = std::min(u_min, b[i].times[k]);
                u_max = std::max(u_max, b[i].times[k]);
                ps.push_back(a[i].times[j]);
                pu.push_back(b[i].times[k]);
                pr.push_back(a[i].values[j] * b[i].values[k]);
            }
        }
    }
    if (ps.empty()) throw EmptyPairingError("cross_covariance: no subject has observations of both variables");

    const double range = std::max({s_max - s_min, u_max - u_min, 1e-12});
    const double bw = resolve_bandwidth_2d(cfg, range, ps.size());
    PlaneFitEngine engine(std::move(ps), std::move(pu), std::move(pr), bw, cfg.kernel);

    CovarianceSurface out;
    out.s_grid.assign(out_grid_s.begin(), out_grid_s.end());
    out.u_grid.assign(out_grid_u.begin(), out_grid_u.end());
    out.bandwidth = bw;
    out.values.resize(static_cast<Eigen::Index>(out.s_grid.size()),
                      static_cast<Eigen::Index>(out.u_grid.size()));
    parallel_for(out.s_grid.size(), threads, [&](std::size_t i) {
        for (std::size_t j = 0; j < out.u_grid.size(); ++j)
            out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                engine.alpha0(out.s_grid[i], out.u_grid[j]);
    });
    if (!out.values.allFinite()) throw NumericError("cross_covariance: non-finite surface value");
    return out;
}

double estimate_noise_variance(std::span<const double> raw_diagonal,
                               std::span<const double> smoothed_diagonal,
                               std::span<const double> grid) {
    if (raw_diagonal.size() != grid.size() || smoothed_diagonal.size() != grid.size())
        throw ShapeError("estimate_noise_variance: vector/grid length mismatch");
    const double lo = grid.front() + 0.25 * (grid.back() - grid.front());
    const double hi = grid.front() + 0.75 * (grid.back() - grid.front());
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        if (grid[j] < lo || grid[j] > hi) continue;
        acc += raw_diagonal[j] - smoothed_diagonal[j];
        ++count;
    }
    if (count == 0) return 0.0;
    return std::max(0.0, acc / static_cast<double>(count));
}

CovarianceSurface empirical_covariance(const Eigen::MatrixXd& curves, std::span<const double> grid) {
    if (static_cast<std::size_t>(curves.cols()) != grid.size())
        throw ShapeError("empirical_covariance: curves/grid mismatch");
    CovarianceSurface out;
    out.s_grid.assign(grid.begin(), grid.end());
    out.u_grid = out.s_grid;
    out.values = (curves.transpose() * curves) / static_cast<double>(curves.rows());
    out.values = 0.5 * (out.values + out.values.transpose()).eval();
    return out;
}

CovarianceSurface empirical_cross_covariance(const Eigen::MatrixXd& a, std::span<const double> a_grid,
                                             const Eigen::MatrixXd& b, std::span<const double> b_grid) {
    if (static_cast<std::size_t>(a.cols()) != a_grid.size() ||
        static_cast<std::size_t>(b.cols()) != b_grid.size() || a.rows() != b.rows())
        throw ShapeError("empirical_cross_covariance: shape mismatch");
    CovarianceSurface out;
    out.s_grid.assign(a_grid.begin(), a_grid.end());
    out.u_grid.assign(b_grid.begin(), b_grid.end());
    out.values = (a.transpose() * b) / static_cast<double>(a.rows());
    return out;
}

std::vector<SparseFunctionalSample> panel_to_samples(const DenseFunctionalPanel& panel,
                                                     std::span<const char> has_row) {
    std::vector<SparseFunctionalSample> out(static_cast<std::size_t>(panel.values.rows()));
    for (Eigen::Index i = 0; i < panel.values.rows(); ++i) {
        if (!has_row.empty() && !has_row[static_cast<std::size_t>(i)]) continue;
        auto& s = out[static_cast<std::size_t>(i)];
        s.times = panel.grid;
        s.values.assign(panel.values.row(i).begin(), panel.values.row(i).end());
    }
    return out;
}

}  // namespace lagflm::smoothing
