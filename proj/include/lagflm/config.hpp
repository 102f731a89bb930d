#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lagflm/model.hpp"
#include "lagflm/sim.hpp"

namespace lagflm::config {

// All run settings, flat `key = value` text with typed defaults. Unknown
// keys are rejected so a typo cannot silently fall back to a default.
struct RunConfig {
    int basis_order = 4;
    int interior_knots = 10;
    int quad_nodes = 30;
    int eval_grid = 100;
    int surface_grid = 100;
    double fve = 0.99;

    std::string kernel = "epanechnikov";
    double bandwidth_1d = 0.0;  // 0 = AUTO
    double bandwidth_2d = 0.0;
    double bandwidth_factor_1d = 1.0;
    double bandwidth_factor_2d = 0.75;
    double bandwidth_factor_recovery = 0.25;

    model::LagWindow lags1{0.1, 0.4};
    model::LagWindow lags2{0.1, 0.4};
    std::pair<double, double> rho{1e-4, 1e-4};

    std::vector<model::LagWindow> d1_grid;
    std::vector<model::LagWindow> d2_grid;
    double rho_lo = 1e-5;
    double rho_hi = 1e-2;
    int rho_count = 20;
    int folds = 10;

    std::uint64_t seed = 0;
    int threads = 0;  // 0 = hardware concurrency

    int n = 100;
    int reps = 20;
    int grid_size = 100;
    double snr = 20.0;
    int m_y_min = 20, m_y_max = 50;
    int m_x2_min = 30, m_x2_max = 50;
    std::vector<int> n_list{50, 100, 150, 200};
    std::vector<double> uppers{0.3, 0.4, 0.5};

    std::string out_dir = ".";
    std::string data_path;
    std::string fit_path;

    // Applies one `key = value` assignment; throws ConfigError on unknown
    // keys or unparsable values.
    void apply(const std::string& key, const std::string& value);

    void load_file(const std::string& path);

    model::FitOptions fit_options() const;
    sim::SimConfig sim_config() const;
    std::vector<std::pair<double, double>> rho_grid() const;

    // Manifest body: every key in schema order, reproducing this run exactly.
    std::string serialize() const;
};

std::vector<model::LagWindow> parse_window_list(const std::string& text);

}  // namespace lagflm::config
