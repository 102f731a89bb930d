// Batch front end: one subcommand per estimation procedure. Diagnostics go
// to stderr, machine-readable results to files under --out (or stdout).

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "lagflm/config.hpp"
#include "lagflm/csv.hpp"
#include "lagflm/grid.hpp"
#include "lagflm/model.hpp"
#include "lagflm/selection.hpp"
#include "lagflm/sim.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

using lagflm::config::RunConfig;

std::string out_path(const RunConfig& cfg, const std::string& name) {
    std::filesystem::create_directories(cfg.out_dir);
    return (std::filesystem::path(cfg.out_dir) / name).string();
}

void write_manifest(const RunConfig& cfg, const std::string& command) {
    std::ofstream f(out_path(cfg, "manifest.txt"), std::ios::binary);
    if (!f) throw lagflm::IoError("cannot write manifest under '" + cfg.out_dir + "'");
    f << "# lagflm " << kVersion << " manifest\n";
    f << "command = " << command << "\n";
    f << cfg.serialize();
}

int cmd_simulate(const RunConfig& cfg) {
    const lagflm::sim::SimulatedDataset ds = lagflm::sim::generate_dataset(cfg.sim_config());
    lagflm::csvio::save_dataset_csv(ds.observed, out_path(cfg, "dataset.csv"));
    write_manifest(cfg, "simulate");
    std::cerr << "simulate: wrote " << ds.observed.subjects() << " subjects to "
              << out_path(cfg, "dataset.csv") << "\n";
    return 0;
}

int cmd_fit(const RunConfig& cfg) {
    if (cfg.data_path.empty()) throw lagflm::ConfigError("fit: --data is required");
    const lagflm::DataBundle data = lagflm::csvio::load_dataset_csv(cfg.data_path);
    const lagflm::model::FitOptions opts = cfg.fit_options();
    const lagflm::model::ModelFit fit =
        lagflm::model::fit(data, cfg.lags1, cfg.lags2, cfg.rho, opts);

    lagflm::csvio::save_fit(fit, out_path(cfg, "fit.txt"));

    const std::vector<double> s1 = lagflm::linspace(cfg.lags1.lower, cfg.lags1.upper, 50);
    const std::vector<double> s2 = lagflm::linspace(cfg.lags2.lower, cfg.lags2.upper, 50);
    lagflm::csvio::write_surface_csv(lagflm::model::coefficient_surface(fit, 1, s1, fit.eval_grid),
                                     s1, fit.eval_grid, out_path(cfg, "beta1_surface.csv"));
    lagflm::csvio::write_surface_csv(lagflm::model::coefficient_surface(fit, 2, s2, fit.eval_grid),
                                     s2, fit.eval_grid, out_path(cfg, "beta2_surface.csv"));

    const lagflm::selection::NpeResult npe = lagflm::selection::in_sample_npe(fit, data, opts.threads);
    {
        std::ofstream f(out_path(cfg, "npe.txt"), std::ios::binary);
        f << "npe = " << lagflm::csvio::format_double(npe.value) << "\n";
        f << "excluded = " << npe.excluded << "\n";
    }
    write_manifest(cfg, "fit");
    std::cout << "npe " << lagflm::csvio::format_double(npe.value) << " excluded " << npe.excluded
              << "\n";
    return 0;
}

int cmd_predict(const RunConfig& cfg) {
    if (cfg.fit_path.empty()) throw lagflm::ConfigError("predict: --fit is required");
    if (cfg.data_path.empty()) throw lagflm::ConfigError("predict: --data is required");
    const lagflm::model::ModelFit fit = lagflm::csvio::load_fit(cfg.fit_path);
    const lagflm::DataBundle data = lagflm::csvio::load_dataset_csv(cfg.data_path);

    std::ofstream f(out_path(cfg, "predictions.csv"), std::ios::binary);
    if (!f) throw lagflm::IoError("cannot write predictions.csv");
    f << "subject_id,time,value\n";
    for (std::size_t i = 0; i < data.subjects(); ++i) {
        lagflm::SparseFunctionalSample x1_obs;
        if (data.has_x1[i]) {
            x1_obs.times = data.x1.grid;
            x1_obs.values.assign(data.x1.values.row(static_cast<Eigen::Index>(i)).begin(),
                                 data.x1.values.row(static_cast<Eigen::Index>(i)).end());
        }
        std::vector<double> times;
        if (!data.y[i].times.empty()) {
            for (double t : data.y[i].times) {
                if (t < fit.valid_lower - 1e-9 || t > 1.0 + 1e-9) {
                    std::cerr << "predict: subject " << data.subject_ids[i] << " time "
                              << lagflm::csvio::format_double(t) << " outside the valid interval ["
                              << lagflm::csvio::format_double(fit.valid_lower) << ", 1]; skipped\n";
                    continue;
                }
                times.push_back(t);
            }
        } else {
            times = fit.eval_grid;
        }
        const std::vector<double> pred = lagflm::model::predict(fit, x1_obs, data.x2[i], times);
        for (std::size_t j = 0; j < times.size(); ++j)
            f << data.subject_ids[i] << "," << lagflm::csvio::format_double(times[j]) << ","
              << lagflm::csvio::format_double(pred[j]) << "\n";
    }
    write_manifest(cfg, "predict");
    return 0;
}

int cmd_select(const RunConfig& cfg) {
    if (cfg.data_path.empty()) throw lagflm::ConfigError("select: --data is required");
    const lagflm::DataBundle data = lagflm::csvio::load_dataset_csv(cfg.data_path);
    lagflm::selection::SearchSpace space;
    space.d1 = cfg.d1_grid.empty() ? std::vector<lagflm::model::LagWindow>{cfg.lags1} : cfg.d1_grid;
    space.d2 = cfg.d2_grid.empty() ? std::vector<lagflm::model::LagWindow>{cfg.lags2} : cfg.d2_grid;
    space.rho_grid = cfg.rho_grid();
    space.k_folds = cfg.folds;

    const lagflm::selection::SelectionResult res =
        lagflm::selection::select_hyperparameters(data, space, cfg.seed, cfg.fit_options());

    std::ofstream f(out_path(cfg, "selection.csv"), std::ios::binary);
    if (!f) throw lagflm::IoError("cannot write selection.csv");
    f << "lags1_lower,lags1_upper,lags2_lower,lags2_upper,rho1,rho2,npe,npe_excluded,cv,selected\n";
    for (std::size_t c = 0; c < res.table.size(); ++c) {
        const auto& row = res.table[c];
        f << lagflm::csvio::format_double(row.lags1.lower) << ","
          << lagflm::csvio::format_double(row.lags1.upper) << ","
          << lagflm::csvio::format_double(row.lags2.lower) << ","
          << lagflm::csvio::format_double(row.lags2.upper) << ","
          << lagflm::csvio::format_double(row.rho1) << "," << lagflm::csvio::format_double(row.rho2)
          << "," << lagflm::csvio::format_double(row.npe) << "," << row.npe_excluded << ","
          << lagflm::csvio::format_double(row.cv) << "," << (c == res.best_index ? 1 : 0) << "\n";
    }
    write_manifest(cfg, "select");
    const auto& best = res.best();
    std::cout << "selected lags1 [" << lagflm::csvio::format_double(best.lags1.lower) << ","
              << lagflm::csvio::format_double(best.lags1.upper) << "] lags2 ["
              << lagflm::csvio::format_double(best.lags2.lower) << ","
              << lagflm::csvio::format_double(best.lags2.upper) << "] rho "
              << lagflm::csvio::format_double(best.rho1) << " npe "
              << lagflm::csvio::format_double(best.npe) << " cv "
              << lagflm::csvio::format_double(best.cv) << "\n";
    return 0;
}

int cmd_bench_table1(const RunConfig& cfg) {
    const auto rho_grid = cfg.rho_grid();
    const auto rows = lagflm::sim::run_table1(cfg.sim_config(), cfg.n_list, cfg.reps, rho_grid,
                                              cfg.fit_options(), cfg.threads);
    std::ofstream f(out_path(cfg, "table1.csv"), std::ios::binary);
    if (!f) throw lagflm::IoError("cannot write table1.csv");
    f << "n,mean_npe_x100,se_npe_x100,reps\n";
    for (const auto& row : rows) {
        f << row.n << "," << lagflm::csvio::format_double(100.0 * row.mean_npe) << ","
          << lagflm::csvio::format_double(100.0 * row.se_npe) << "," << row.reps << "\n";
        std::cout << "n=" << row.n << " npe_x100=" << lagflm::csvio::format_double(100.0 * row.mean_npe)
                  << " se=" << lagflm::csvio::format_double(100.0 * row.se_npe) << "\n";
    }
    write_manifest(cfg, "bench-table1");
    return 0;
}

int cmd_bench_lags(const RunConfig& cfg) {
    const auto rho_grid = cfg.rho_grid();
    const auto res = lagflm::sim::run_lag_experiment(cfg.sim_config(), cfg.uppers, cfg.reps,
                                                     rho_grid, cfg.folds, cfg.fit_options(),
                                                     cfg.threads);
    std::ofstream f(out_path(cfg, "lag_selection.csv"), std::ios::binary);
    if (!f) throw lagflm::IoError("cannot write lag_selection.csv");
    f << "replication,selected_upper\n";
    for (std::size_t r = 0; r < res.selected_upper.size(); ++r)
        f << r << "," << lagflm::csvio::format_double(res.selected_upper[r]) << "\n";
    write_manifest(cfg, "bench-lags");
    std::cout << "hits " << res.hits << " / " << res.selected_upper.size() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"lagflm: lag historical functional linear model toolkit"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::string config_path;
    // Raw flag values; only flags the user actually passed override the file.
    std::string lags1, lags2, rho, d1, d2, rho_grid, n_list, uppers;
    long long seed = -1;
    int threads = -1, n = -1, reps = -1, folds = -1;
    std::string out, data, fit_path;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "config file (key = value lines)");
        sub->add_option("--seed", seed, "RNG seed");
        sub->add_option("--threads", threads, "thread budget (0 = all cores)");
        sub->add_option("--out", out, "output directory");
    };

    CLI::App* sim = app.add_subcommand("simulate", "generate a synthetic dataset CSV");
    add_common(sim);
    sim->add_option("--n", n, "number of subjects");

    CLI::App* fit = app.add_subcommand("fit", "fit the model on a dataset");
    add_common(fit);
    fit->add_option("--data", data, "dataset CSV")->required();
    fit->add_option("--lags1", lags1, "lag window a,b for predictor 1");
    fit->add_option("--lags2", lags2, "lag window a,b for predictor 2");
    fit->add_option("--rho", rho, "regularization pair r1,r2");

    CLI::App* pred = app.add_subcommand("predict", "predict new responses from a fit artifact");
    add_common(pred);
    pred->add_option("--fit", fit_path, "fit artifact path")->required();
    pred->add_option("--data", data, "new-subject dataset CSV")->required();

    CLI::App* sel = app.add_subcommand("select", "search lags and regularization");
    add_common(sel);
    sel->add_option("--data", data, "dataset CSV")->required();
    sel->add_option("--d1-grid", d1, "candidate windows a,b;c,d;... for predictor 1");
    sel->add_option("--d2-grid", d2, "candidate windows for predictor 2");
    sel->add_option("--rho-grid", rho_grid, "lo,hi,count log-spaced rho grid");
    sel->add_option("--folds", folds, "cross-validation folds");

    CLI::App* bt = app.add_subcommand("bench-table1", "replicate the in-sample NPE table");
    add_common(bt);
    bt->add_option("--reps", reps, "replications per n");
    bt->add_option("--n-list", n_list, "comma-separated subject counts");

    CLI::App* bl = app.add_subcommand("bench-lags", "replicate the lag-selection experiment");
    add_common(bl);
    bl->add_option("--reps", reps, "replications");
    bl->add_option("--uppers", uppers, "candidate shared upper lags");
    bl->add_option("--n", n, "number of subjects");
    bl->add_option("--folds", folds, "cross-validation folds");

    CLI11_PARSE(app, argc, argv);

    try {
        if (!config_path.empty()) cfg.load_file(config_path);
        if (seed >= 0) cfg.apply("seed", std::to_string(seed));
        if (threads >= 0) cfg.apply("threads", std::to_string(threads));
        if (n >= 0) cfg.apply("n", std::to_string(n));
        if (reps >= 0) cfg.apply("reps", std::to_string(reps));
        if (folds >= 0) cfg.apply("folds", std::to_string(folds));
        if (!out.empty()) cfg.apply("out", out);
        if (!data.empty()) cfg.apply("data", data);
        if (!fit_path.empty()) cfg.apply("fit", fit_path);
        if (!lags1.empty()) cfg.apply("lags1", lags1);
        if (!lags2.empty()) cfg.apply("lags2", lags2);
        if (!rho.empty()) cfg.apply("rho", rho);
        if (!d1.empty()) cfg.apply("d1_grid", d1);
        if (!d2.empty()) cfg.apply("d2_grid", d2);
        if (!rho_grid.empty()) cfg.apply("rho_grid", rho_grid);
        if (!n_list.empty()) cfg.apply("n_list", n_list);
        if (!uppers.empty()) cfg.apply("uppers", uppers);

        if (sim->parsed()) return cmd_simulate(cfg);
        if (fit->parsed()) return cmd_fit(cfg);
        if (pred->parsed()) return cmd_predict(cfg);
        if (sel->parsed()) return cmd_select(cfg);
        if (bt->parsed()) return cmd_bench_table1(cfg);
        if (bl->parsed()) return cmd_bench_lags(cfg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
