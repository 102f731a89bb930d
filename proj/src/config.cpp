#include "lagflm/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "lagflm/csv.hpp"
#include "lagflm/selection.hpp"

namespace lagflm::config {

namespace {

std::string strip(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& v) {
    const char* begin = v.c_str();
    char* end = nullptr;
    const double x = std::strtod(begin, &end);
    if (end == begin || *strip(end).c_str() != '\0')
        throw ConfigError("config key '" + key + "': cannot parse number '" + v + "'");
    return x;
}

int to_int(const std::string& key, const std::string& v) {
    const double x = to_double(key, v);
    const int i = static_cast<int>(x);
    if (static_cast<double>(i) != x)
        throw ConfigError("config key '" + key + "': expected an integer, got '" + v + "'");
    return i;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = s.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(strip(s.substr(start)));
            return out;
        }
        out.push_back(strip(s.substr(start, pos - start)));
        start = pos + 1;
    }
}

std::pair<double, double> to_pair(const std::string& key, const std::string& v) {
    const auto parts = split(v, ',');
    if (parts.size() != 2) throw ConfigError("config key '" + key + "': expected 'a,b', got '" + v + "'");
    return {to_double(key, parts[0]), to_double(key, parts[1])};
}

}  // namespace

std::vector<model::LagWindow> parse_window_list(const std::string& text) {
    std::vector<model::LagWindow> out;
    for (const auto& item : split(text, ';')) {
        if (item.empty()) continue;
        const auto p = to_pair("lag window", item);
        model::LagWindow w{p.first, p.second};
        w.validate();
        out.push_back(w);
    }
    if (out.empty()) throw ConfigError("empty lag window list '" + text + "'");
    return out;
}

void RunConfig::apply(const std::string& key, const std::string& value) {
    if (key == "basis_order") basis_order = to_int(key, value);
    else if (key == "interior_knots") interior_knots = to_int(key, value);
    else if (key == "quad_nodes") quad_nodes = to_int(key, value);
    else if (key == "eval_grid") eval_grid = to_int(key, value);
    else if (key == "surface_grid") surface_grid = to_int(key, value);
    else if (key == "fve") fve = to_double(key, value);
    else if (key == "kernel") {
        if (value != "epanechnikov" && value != "gaussian")
            throw ConfigError("config key 'kernel': unknown kernel '" + value + "'");
        kernel = value;
    } else if (key == "bandwidth_1d") bandwidth_1d = to_double(key, value);
    else if (key == "bandwidth_2d") bandwidth_2d = to_double(key, value);
    else if (key == "bandwidth_factor_1d") bandwidth_factor_1d = to_double(key, value);
    else if (key == "bandwidth_factor_2d") bandwidth_factor_2d = to_double(key, value);
    else if (key == "bandwidth_factor_recovery") bandwidth_factor_recovery = to_double(key, value);
    else if (key == "lags1") {
        const auto p = to_pair(key, value);
        lags1 = {p.first, p.second};
        lags1.validate();
    } else if (key == "lags2") {
        const auto p = to_pair(key, value);
        lags2 = {p.first, p.second};
        lags2.validate();
    } else if (key == "rho") rho = to_pair(key, value);
    else if (key == "d1_grid") d1_grid = parse_window_list(value);
    else if (key == "d2_grid") d2_grid = parse_window_list(value);
    else if (key == "rho_grid") {
        const auto parts = split(value, ',');
        if (parts.size() != 3)
            throw ConfigError("config key 'rho_grid': expected 'lo,hi,count'");
        rho_lo = to_double(key, parts[0]);
        rho_hi = to_double(key, parts[1]);
        rho_count = to_int(key, parts[2]);
    } else if (key == "folds") folds = to_int(key, value);
    else if (key == "seed") {
        const double x = to_double(key, value);
        if (x < 0) throw ConfigError("config key 'seed': must be nonnegative");
        seed = static_cast<std::uint64_t>(x);
    } else if (key == "threads") threads = to_int(key, value);
    else if (key == "n") n = to_int(key, value);
    else if (key == "reps") reps = to_int(key, value);
    else if (key == "grid_size") grid_size = to_int(key, value);
    else if (key == "snr") snr = to_double(key, value);
    else if (key == "m_y_min") m_y_min = to_int(key, value);
    else if (key == "m_y_max") m_y_max = to_int(key, value);
    else if (key == "m_x2_min") m_x2_min = to_int(key, value);
    else if (key == "m_x2_max") m_x2_max = to_int(key, value);
    else if (key == "n_list") {
        n_list.clear();
        for (const auto& s : split(value, ',')) n_list.push_back(to_int(key, s));
    } else if (key == "uppers") {
        uppers.clear();
        for (const auto& s : split(value, ',')) uppers.push_back(to_double(key, s));
    } else if (key == "out") out_dir = value;
    else if (key == "data") data_path = value;
    else if (key == "fit") fit_path = value;
    else throw ConfigError("unknown config key '" + key + "'");
}

void RunConfig::load_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config file '" + path + "'");
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        const std::string body = strip(line);
        if (body.empty() || body.front() == '#') continue;
        const std::size_t pos = body.find('=');
        if (pos == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(line_no) + ": expected 'key = value'");
        apply(strip(body.substr(0, pos)), strip(body.substr(pos + 1)));
    }
}

model::FitOptions RunConfig::fit_options() const {
    model::FitOptions opts;
    opts.basis_order = basis_order;
    opts.interior_knots = interior_knots;
    opts.quad_nodes = quad_nodes;
    opts.eval_grid_size = eval_grid;
    opts.surface_grid_size = surface_grid;
    opts.fve = fve;
    opts.smoothing.kernel = kernel == "gaussian" ? smoothing::KernelFamily::gaussian
                                                 : smoothing::KernelFamily::epanechnikov;
    opts.smoothing.bandwidth_1d = bandwidth_1d;
    opts.smoothing.bandwidth_2d = bandwidth_2d;
    opts.smoothing.factor_1d = bandwidth_factor_1d;
    opts.smoothing.factor_2d = bandwidth_factor_2d;
    opts.smoothing.factor_recovery = bandwidth_factor_recovery;
    opts.threads = threads;
    return opts;
}

sim::SimConfig RunConfig::sim_config() const {
    sim::SimConfig cfg;
    cfg.n = n;
    cfg.grid_size = grid_size;
    cfg.m_y_min = m_y_min;
    cfg.m_y_max = m_y_max;
    cfg.m_x2_min = m_x2_min;
    cfg.m_x2_max = m_x2_max;
    cfg.lags1 = lags1;
    cfg.lags2 = lags2;
    cfg.snr = snr;
    cfg.seed = seed;
    return cfg;
}

std::vector<std::pair<double, double>> RunConfig::rho_grid() const {
    return selection::default_rho_grid(rho_lo, rho_hi, rho_count);
}

std::string RunConfig::serialize() const {
    std::ostringstream out;
    auto win = [](const model::LagWindow& w) {
        return csvio::format_double(w.lower) + "," + csvio::format_double(w.upper);
    };
    out << "basis_order = " << basis_order << "\n";
    out << "interior_knots = " << interior_knots << "\n";
    out << "quad_nodes = " << quad_nodes << "\n";
    out << "eval_grid = " << eval_grid << "\n";
    out << "surface_grid = " << surface_grid << "\n";
    out << "fve = " << csvio::format_double(fve) << "\n";
    out << "kernel = " << kernel << "\n";
    out << "bandwidth_1d = " << csvio::format_double(bandwidth_1d) << "\n";
    out << "bandwidth_2d = " << csvio::format_double(bandwidth_2d) << "\n";
    out << "bandwidth_factor_1d = " << csvio::format_double(bandwidth_factor_1d) << "\n";
    out << "bandwidth_factor_2d = " << csvio::format_double(bandwidth_factor_2d) << "\n";
    out << "bandwidth_factor_recovery = " << csvio::format_double(bandwidth_factor_recovery) << "\n";
    out << "lags1 = " << win(lags1) << "\n";
    out << "lags2 = " << win(lags2) << "\n";
    out << "rho = " << csvio::format_double(rho.first) << "," << csvio::format_double(rho.second)
        << "\n";
    if (!d1_grid.empty()) {
        out << "d1_grid = ";
        for (std::size_t i = 0; i < d1_grid.size(); ++i) out << (i ? ";" : "") << win(d1_grid[i]);
        out << "\n";
    }
    if (!d2_grid.empty()) {
        out << "d2_grid = ";
        for (std::size_t i = 0; i < d2_grid.size(); ++i) out << (i ? ";" : "") << win(d2_grid[i]);
        out << "\n";
    }
    out << "rho_grid = " << csvio::format_double(rho_lo) << "," << csvio::format_double(rho_hi)
        << "," << rho_count << "\n";
    out << "folds = " << folds << "\n";
    out << "seed = " << seed << "\n";
    out << "threads = " << threads << "\n";
    out << "n = " << n << "\n";
    out << "reps = " << reps << "\n";
    out << "grid_size = " << grid_size << "\n";
    out << "snr = " << csvio::format_double(snr) << "\n";
    out << "m_y_min = " << m_y_min << "\n";
    out << "m_y_max = " << m_y_max << "\n";
    out << "m_x2_min = " << m_x2_min << "\n";
    out << "m_x2_max = " << m_x2_max << "\n";
    out << "n_list = ";
    for (std::size_t i = 0; i < n_list.size(); ++i) out << (i ? "," : "") << n_list[i];
    out << "\n";
    out << "uppers = ";
    for (std::size_t i = 0; i < uppers.size(); ++i)
        out << (i ? "," : "") << csvio::format_double(uppers[i]);
    out << "\n";
    return out.str();
}

}  // namespace lagflm::config
