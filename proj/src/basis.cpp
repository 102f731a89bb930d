#include "lagflm/basis.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace lagflm::basis {

BasisSystem::BasisSystem(int order, int interior_knots, Interval interval)
    : order_(order), interior_knots_(interior_knots), interval_(interval) {
    if (order < 1) throw ConfigError("basis order must be >= 1, got " + std::to_string(order));
    if (interior_knots < 1)
        throw ConfigError("interior knot count must be >= 1, got " + std::to_string(interior_knots));
    if (!(interval.length() > 0.0))
        throw InvalidIntervalError("basis interval [" + std::to_string(interval.lo) + ", " +
                                   std::to_string(interval.hi) + "] has non-positive length");

    size_ = interior_knots_ + order_;
    knots_.reserve(static_cast<std::size_t>(2 * order_ + interior_knots_));
    for (int i = 0; i < order_; ++i) knots_.push_back(interval.lo);
    const double step = interval.length() / static_cast<double>(interior_knots_ + 1);
    for (int i = 1; i <= interior_knots_; ++i) knots_.push_back(interval.lo + step * i);
    for (int i = 0; i < order_; ++i) knots_.push_back(interval.hi);
}

int BasisSystem::eval_local(double s, double* out) const {
    // Knot span: largest i with knots[i] <= s < knots[i+1], clamped so the
    // right endpoint lands in the last non-empty span.
    const int n_knots = static_cast<int>(knots_.size());
    int span;
    if (s >= interval_.hi) {
        span = n_knots - order_ - 1;
    } else {
        auto it = std::upper_bound(knots_.begin() + (order_ - 1),
                                   knots_.end() - (order_ - 1), s);
        span = static_cast<int>(it - knots_.begin()) - 1;
    }

    // Cox-de Boor triangle over the non-vanishing members.
    out[0] = 1.0;
    std::vector<double> left(static_cast<std::size_t>(order_));
    std::vector<double> right(static_cast<std::size_t>(order_));
    for (int j = 1; j < order_; ++j) {
        left[static_cast<std::size_t>(j)] = s - knots_[static_cast<std::size_t>(span + 1 - j)];
        right[static_cast<std::size_t>(j)] = knots_[static_cast<std::size_t>(span + j)] - s;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            const double denom = right[static_cast<std::size_t>(r + 1)] +
                                 left[static_cast<std::size_t>(j - r)];
            const double temp = out[r] / denom;
            out[r] = saved + right[static_cast<std::size_t>(r + 1)] * temp;
            saved = left[static_cast<std::size_t>(j - r)] * temp;
        }
        out[j] = saved;
    }
    return span - order_ + 1;
}

Eigen::VectorXd BasisSystem::eval(double s) const {
    constexpr double kEdgeTol = 1e-12;
    if (s < interval_.lo - kEdgeTol || s > interval_.hi + kEdgeTol)
        throw OutOfDomainError("basis evaluation point " + std::to_string(s) + " outside [" +
                               std::to_string(interval_.lo) + ", " + std::to_string(interval_.hi) + "]");
    s = std::clamp(s, interval_.lo, interval_.hi);

    Eigen::VectorXd values = Eigen::VectorXd::Zero(size_);
    std::vector<double> local(static_cast<std::size_t>(order_));
    const int first = eval_local(s, local.data());
    for (int j = 0; j < order_; ++j) {
        const int idx = first + j;
        if (idx >= 0 && idx < size_) values[idx] = local[static_cast<std::size_t>(j)];
    }
    return values;
}

Eigen::MatrixXd BasisSystem::eval_matrix(std::span<const double> points) const {
    Eigen::MatrixXd m(size_, static_cast<Eigen::Index>(points.size()));
    for (std::size_t c = 0; c < points.size(); ++c) m.col(static_cast<Eigen::Index>(c)) = eval(points[c]);
    return m;
}

BasisSystem make_bspline_basis(int order, int interior_knots, Interval interval) {
    return BasisSystem(order, interior_knots, interval);
}

namespace {

// Nodes/weights on [-1, 1] by Newton iteration on the Legendre recurrence.
void gauss_legendre_reference(int n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(static_cast<std::size_t>(n), 0.0);
    w.assign(static_cast<std::size_t>(n), 0.0);
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        // Chebyshev-based initial guess.
        double z = std::cos(3.141592653589793238462643383279 * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        x[static_cast<std::size_t>(i)] = -z;
        x[static_cast<std::size_t>(n - 1 - i)] = z;
        const double wi = 2.0 / ((1.0 - z * z) * pp * pp);
        w[static_cast<std::size_t>(i)] = wi;
        w[static_cast<std::size_t>(n - 1 - i)] = wi;
    }
}

}  // namespace

QuadratureRule gauss_legendre(int count, Interval interval) {
    if (count < 2) throw ConfigError("quadrature rule needs at least 2 nodes");
    if (!(interval.length() > 0.0))
        throw InvalidIntervalError("quadrature interval has non-positive length");
    std::vector<double> x, w;
    gauss_legendre_reference(count, x, w);
    QuadratureRule rule;
    rule.nodes.resize(static_cast<std::size_t>(count));
    rule.weights.resize(static_cast<std::size_t>(count));
    const double mid = 0.5 * (interval.lo + interval.hi);
    const double half = 0.5 * interval.length();
    for (int i = 0; i < count; ++i) {
        rule.nodes[static_cast<std::size_t>(i)] = mid + half * x[static_cast<std::size_t>(i)];
        rule.weights[static_cast<std::size_t>(i)] = half * w[static_cast<std::size_t>(i)];
    }
    return rule;
}

double quadrature_integrate(const std::function<double(double)>& f, Interval interval, int nodes) {
    const QuadratureRule rule = gauss_legendre(nodes, interval);
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double v = f(rule.nodes[i]);
        if (!std::isfinite(v))
            throw NumericError("non-finite integrand value at node s = " + std::to_string(rule.nodes[i]));
        acc += rule.weights[i] * v;
    }
    return acc;
}

}  // namespace lagflm::basis
