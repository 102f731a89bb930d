#include "lagflm/fpca.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "lagflm/grid.hpp"

namespace lagflm::fpca {

double Eigensystem::total_variance() const {
    return std::accumulate(eigenvalues.begin(), eigenvalues.end(), 0.0);
}

double Eigensystem::eigenfunction_at(std::size_t l, double t) const {
    const Eigen::VectorXd& col = eigenfunctions.col(static_cast<Eigen::Index>(l));
    return interp1(grid, std::span<const double>(col.data(), static_cast<std::size_t>(col.size())), t);
}

Eigensystem eigendecompose(const smoothing::CovarianceSurface& c, double noise_variance) {
    if (!c.square()) throw ShapeError("eigendecompose: surface must be square");
    const Eigen::Index m = c.values.rows();
    if ((c.values - c.values.transpose()).cwiseAbs().maxCoeff() > 1e-8)
        throw ShapeError("eigendecompose: surface not symmetric within 1e-8");

    // Discretized integral eigenproblem: symmetrize with W^(1/2) so a plain
    // symmetric solver yields the quadrature-weighted eigenpairs.
    const std::vector<double> w = trapezoid_weights(c.s_grid);
    Eigen::VectorXd sqrt_w(m);
    for (Eigen::Index j = 0; j < m; ++j) sqrt_w[j] = std::sqrt(w[static_cast<std::size_t>(j)]);
    Eigen::MatrixXd a = sqrt_w.asDiagonal() * c.values * sqrt_w.asDiagonal();
    a = 0.5 * (a + a.transpose()).eval();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a);
    if (solver.info() != Eigen::Success) throw NumericError("eigendecompose: eigensolver failed");

    const Eigen::VectorXd& vals = solver.eigenvalues();   // ascending
    const double lambda_max = vals.size() > 0 ? std::max(vals[m - 1], 0.0) : 0.0;
    const double floor = lambda_max * 1e-14;

    Eigensystem out;
    out.grid = c.s_grid;
    out.noise_variance = std::max(noise_variance, 0.0);
    std::vector<Eigen::Index> keep;
    for (Eigen::Index j = m - 1; j >= 0; --j)
        if (vals[j] > floor && vals[j] > 0.0) keep.push_back(j);

    out.eigenvalues.resize(keep.size());
    out.eigenfunctions.resize(m, static_cast<Eigen::Index>(keep.size()));
    for (std::size_t l = 0; l < keep.size(); ++l) {
        out.eigenvalues[l] = vals[keep[l]];
        Eigen::VectorXd phi = solver.eigenvectors().col(keep[l]).cwiseQuotient(sqrt_w);
        // Sign convention: the entry of largest magnitude is positive.
        Eigen::Index arg = 0;
        double best = 0.0;
        for (Eigen::Index j = 0; j < m; ++j)
            if (std::abs(phi[j]) > best) {
                best = std::abs(phi[j]);
                arg = j;
            }
        if (phi[arg] < 0.0) phi = -phi;
        out.eigenfunctions.col(static_cast<Eigen::Index>(l)) = phi;
    }
    return out;
}

int select_truncation(const Eigensystem& e, double fve) {
    if (!(fve > 0.0 && fve <= 1.0)) throw ConfigError("fve must lie in (0, 1]");
    const double total = e.total_variance();
    if (!(total > 0.0)) throw NoSignalError("select_truncation: all eigenvalues are zero");
    double acc = 0.0;
    for (std::size_t l = 0; l < e.eigenvalues.size(); ++l) {
        acc += e.eigenvalues[l];
        if (acc / total >= fve) return static_cast<int>(l) + 1;
    }
    return static_cast<int>(e.eigenvalues.size());
}

ScoreEstimate blup_scores(const Eigensystem& e, const SparseFunctionalSample& obs, int L) {
    if (L < 1 || static_cast<std::size_t>(L) > e.components())
        throw ConfigError("blup_scores: truncation L = " + std::to_string(L) + " out of range");
    const auto m = static_cast<Eigen::Index>(obs.size());

    // Eigenfunctions at the observation times (linear interpolation off-grid).
    Eigen::MatrixXd phi(m, static_cast<Eigen::Index>(e.components()));
    for (std::size_t l = 0; l < e.components(); ++l)
        for (Eigen::Index j = 0; j < m; ++j)
            phi(j, static_cast<Eigen::Index>(l)) =
                e.eigenfunction_at(l, obs.times[static_cast<std::size_t>(j)]);

    Eigen::VectorXd lambda = Eigen::Map<const Eigen::VectorXd>(
        e.eigenvalues.data(), static_cast<Eigen::Index>(e.components()));
    Eigen::MatrixXd sigma = phi * lambda.asDiagonal() * phi.transpose();
    const double diag_max = sigma.diagonal().maxCoeff();
    const double ridge = std::max(e.noise_variance, 1e-10 * std::max(diag_max, 0.0));
    sigma.diagonal().array() += ridge;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> chk(sigma);
    const double ev_min = chk.eigenvalues().minCoeff();
    const double ev_max = chk.eigenvalues().maxCoeff();
    if (!(ev_min > 0.0) || ev_max / ev_min > 1e12)
        throw IllConditionedError(
            "blup_scores: observation covariance is numerically singular (condition > 1e12); "
            "a positive noise variance regularizes it");

    Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(obs.values.data(), m);
    Eigen::VectorXd z = sigma.llt().solve(w);

    ScoreEstimate out;
    out.truncation = L;
    out.scores.resize(L);
    for (int l = 0; l < L; ++l)
        out.scores[l] = e.eigenvalues[static_cast<std::size_t>(l)] * phi.col(l).dot(z);
    return out;
}

std::vector<double> reconstruct_curve(const Eigensystem& e, const ScoreEstimate& s,
                                      std::span<const double> eval_grid) {
    if (s.truncation != s.scores.size() ||
        static_cast<std::size_t>(s.truncation) > e.components())
        throw ShapeError("reconstruct_curve: truncation inconsistent with eigensystem");
    std::vector<double> out(eval_grid.size(), 0.0);
    for (std::size_t j = 0; j < eval_grid.size(); ++j)
        for (int l = 0; l < s.truncation; ++l)
            out[j] += s.scores[l] * e.eigenfunction_at(static_cast<std::size_t>(l), eval_grid[j]);
    return out;
}

}  // namespace lagflm::fpca
