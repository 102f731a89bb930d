#pragma once

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "lagflm/errors.hpp"

namespace lagflm::basis {

struct Interval {
    double lo = 0.0;
    double hi = 1.0;
    double length() const { return hi - lo; }
};

// Clamped B-spline family on an interval. `order` is the spline order
// (polynomial degree + 1, and the number of repeated knots at each end);
// the default order-4 family has cubic pieces. With n interior knots the
// family has K = n + order members.
class BasisSystem {
public:
    BasisSystem(int order, int interior_knots, Interval interval);

    int order() const { return order_; }
    int interior_knots() const { return interior_knots_; }
    int size() const { return size_; }
    const Interval& interval() const { return interval_; }
    const std::vector<double>& knot_vector() const { return knots_; }

    // All K basis values at s; throws OutOfDomainError outside the interval.
    Eigen::VectorXd eval(double s) const;

    // K x points.size() matrix of basis values, one column per point.
    Eigen::MatrixXd eval_matrix(std::span<const double> points) const;

private:
    // Values of the `order` non-vanishing members at s; returns their first index.
    int eval_local(double s, double* out) const;

    int order_;
    int interior_knots_;
    Interval interval_;
    std::vector<double> knots_;
    int size_;
};

BasisSystem make_bspline_basis(int order, int interior_knots, Interval interval);

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// Gauss-Legendre rule with `count` nodes mapped onto the interval.
QuadratureRule gauss_legendre(int count, Interval interval);

// Gauss-Legendre approximation of the integral of f over the interval.
// Throws NumericError (with the node location) if f is non-finite at a node.
double quadrature_integrate(const std::function<double(double)>& f, Interval interval, int nodes);

}  // namespace lagflm::basis
