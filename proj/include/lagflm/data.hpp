#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lagflm/errors.hpp"

namespace lagflm {

// Irregular per-subject observations of one variable on [0,1].
struct SparseFunctionalSample {
    std::string subject_id;
    std::vector<double> times;   // strictly increasing
    std::vector<double> values;

    std::size_t size() const { return times.size(); }

    void validate() const {
        if (times.size() != values.size())
            throw ShapeError("sample '" + subject_id + "': times/values length mismatch");
        if (times.empty())
            throw ShapeError("sample '" + subject_id + "': needs at least one observation");
        for (std::size_t j = 0; j < times.size(); ++j) {
            if (!(times[j] >= 0.0 && times[j] <= 1.0))
                throw OutOfDomainError("sample '" + subject_id + "': time outside [0,1]");
            if (!std::isfinite(values[j]))
                throw NumericError("sample '" + subject_id + "': non-finite value");
            if (j > 0 && !(times[j] > times[j - 1]))
                throw ShapeError("sample '" + subject_id + "': times not strictly increasing");
        }
    }
};

// Common regular grid plus one row of discretized noisy curve per subject.
struct DenseFunctionalPanel {
    std::vector<double> grid;
    Eigen::MatrixXd values;  // n x grid.size()

    std::size_t subjects() const { return static_cast<std::size_t>(values.rows()); }
    double spacing() const {
        return grid.size() > 1 ? (grid.back() - grid.front()) / static_cast<double>(grid.size() - 1)
                               : 1.0;
    }
};

// Subject-aligned dataset: y[i], x2[i] and row i of x1 all belong to
// subject_ids[i]. A subject may be missing a variable (empty sample /
// has_x1[i] == false); pairings skip what is absent.
struct DataBundle {
    std::vector<std::string> subject_ids;
    std::vector<SparseFunctionalSample> y;
    std::vector<SparseFunctionalSample> x2;
    DenseFunctionalPanel x1;
    std::vector<char> has_x1;

    std::size_t subjects() const { return subject_ids.size(); }
};

}  // namespace lagflm
