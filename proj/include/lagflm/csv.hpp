#pragma once

#include <span>
#include <string>

#include <Eigen/Dense>

#include "lagflm/data.hpp"
#include "lagflm/model.hpp"

namespace lagflm::csvio {

// Shortest representation that round-trips IEEE doubles through text.
std::string format_double(double v);

// Long-format dataset: header `subject_id,variable,time,value`, variable in
// {y, x1, x2}. x1 rows must share one common grid across subjects.
DataBundle load_dataset_csv(const std::string& path);
void save_dataset_csv(const DataBundle& data, const std::string& path);

// Header `s,t,value`; rows ordered t-major (all s for the first t, then the
// next t), 17 significant digits.
void write_surface_csv(const Eigen::MatrixXd& surface, std::span<const double> s_grid,
                       std::span<const double> t_grid, const std::string& path);

struct SurfaceCsv {
    std::vector<double> s_grid;
    std::vector<double> t_grid;
    Eigen::MatrixXd values;  // s x t
};
SurfaceCsv read_surface_csv(const std::string& path);

// Fit artifact: flat sectioned text file, sufficient for prediction.
void save_fit(const model::ModelFit& fit, const std::string& path);
model::ModelFit load_fit(const std::string& path);

}  // namespace lagflm::csvio
