#include "lagflm/csv.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace lagflm::csvio {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

double parse_double(const std::string& s, const std::string& what, std::size_t line_no) {
    const char* begin = s.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0')
        throw ParseError("line " + std::to_string(line_no) + ": cannot parse " + what + " '" + s + "'");
    return v;
}

std::string strip(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    return f;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "' for reading");
    return f;
}

void write_values(std::ofstream& f, std::span<const double> v) {
    for (double x : v) f << format_double(x) << "\n";
}

}  // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

DataBundle load_dataset_csv(const std::string& path) {
    std::ifstream f = open_in(path);
    std::string line;
    std::size_t line_no = 0;

    if (!std::getline(f, line)) throw ParseError(path + ": empty file");
    ++line_no;
    if (strip(line) != "subject_id,variable,time,value")
        throw ParseError(path + ": expected header 'subject_id,variable,time,value'");

    struct Raw {
        std::vector<std::pair<double, double>> y, x1, x2;
    };
    std::vector<std::string> order;
    std::map<std::string, Raw> per_subject;

    while (std::getline(f, line)) {
        ++line_no;
        const std::string body = strip(line);
        if (body.empty()) continue;
        const auto fields = split(body, ',');
        if (fields.size() != 4)
            throw ParseError("line " + std::to_string(line_no) + ": expected 4 fields, got " +
                             std::to_string(fields.size()));
        const std::string id = strip(fields[0]);
        const std::string var = strip(fields[1]);
        const double t = parse_double(strip(fields[2]), "time", line_no);
        const double v = parse_double(strip(fields[3]), "value", line_no);
        if (!(t >= 0.0 && t <= 1.0))
            throw ParseError("line " + std::to_string(line_no) + ": time " + format_double(t) +
                             " outside [0,1]");
        if (!std::isfinite(v))
            throw ParseError("line " + std::to_string(line_no) + ": non-finite value");
        if (per_subject.find(id) == per_subject.end()) order.push_back(id);
        auto& raw = per_subject[id];
        if (var == "y")
            raw.y.emplace_back(t, v);
        else if (var == "x1")
            raw.x1.emplace_back(t, v);
        else if (var == "x2")
            raw.x2.emplace_back(t, v);
        else
            throw ParseError("line " + std::to_string(line_no) + ": unknown variable tag '" + var +
                             "' (expected y, x1 or x2)");
    }
    if (order.empty()) throw ParseError(path + ": no data rows");

    auto to_sample = [](const std::string& id, std::vector<std::pair<double, double>> rows) {
        std::stable_sort(rows.begin(), rows.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        SparseFunctionalSample s;
        s.subject_id = id;
        for (const auto& [t, v] : rows) {
            s.times.push_back(t);
            s.values.push_back(v);
        }
        if (!s.times.empty()) s.validate();
        return s;
    };

    DataBundle out;
    std::vector<double> x1_grid;
    std::vector<std::vector<double>> x1_rows;
    for (const auto& id : order) {
        auto& raw = per_subject[id];
        out.subject_ids.push_back(id);
        out.y.push_back(to_sample(id, std::move(raw.y)));
        out.x2.push_back(to_sample(id, std::move(raw.x2)));
        SparseFunctionalSample x1 = to_sample(id, std::move(raw.x1));
        out.has_x1.push_back(x1.times.empty() ? 0 : 1);
        if (!x1.times.empty()) {
            if (x1_grid.empty()) {
                x1_grid = x1.times;
            } else if (x1.times != x1_grid) {
                throw ShapeError("dense-grid violation: subject '" + id +
                                 "' has x1 times differing from the common grid");
            }
        }
        x1_rows.push_back(std::move(x1.values));
    }

    out.x1.grid = x1_grid;
    out.x1.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(out.subjects()),
                                          static_cast<Eigen::Index>(x1_grid.size()));
    for (std::size_t i = 0; i < out.subjects(); ++i)
        if (out.has_x1[i])
            for (std::size_t j = 0; j < x1_grid.size(); ++j)
                out.x1.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    x1_rows[i][j];
    return out;
}

void save_dataset_csv(const DataBundle& data, const std::string& path) {
    std::ofstream f = open_out(path);
    f << "subject_id,variable,time,value\n";
    for (std::size_t i = 0; i < data.subjects(); ++i) {
        const std::string& id = data.subject_ids[i];
        if (data.has_x1[i])
            for (std::size_t j = 0; j < data.x1.grid.size(); ++j)
                f << id << ",x1," << format_double(data.x1.grid[j]) << ","
                  << format_double(data.x1.values(static_cast<Eigen::Index>(i),
                                                  static_cast<Eigen::Index>(j)))
                  << "\n";
        for (std::size_t j = 0; j < data.x2[i].size(); ++j)
            f << id << ",x2," << format_double(data.x2[i].times[j]) << ","
              << format_double(data.x2[i].values[j]) << "\n";
        for (std::size_t j = 0; j < data.y[i].size(); ++j)
            f << id << ",y," << format_double(data.y[i].times[j]) << ","
              << format_double(data.y[i].values[j]) << "\n";
    }
    if (!f) throw IoError("write failed for '" + path + "'");
}

void write_surface_csv(const Eigen::MatrixXd& surface, std::span<const double> s_grid,
                       std::span<const double> t_grid, const std::string& path) {
    if (surface.rows() != static_cast<Eigen::Index>(s_grid.size()) ||
        surface.cols() != static_cast<Eigen::Index>(t_grid.size()))
        throw ShapeError("write_surface_csv: surface/grid shape mismatch");
    std::ofstream f = open_out(path);
    f << "s,t,value\n";
    for (std::size_t jt = 0; jt < t_grid.size(); ++jt)
        for (std::size_t is = 0; is < s_grid.size(); ++is)
            f << format_double(s_grid[is]) << "," << format_double(t_grid[jt]) << ","
              << format_double(surface(static_cast<Eigen::Index>(is), static_cast<Eigen::Index>(jt)))
              << "\n";
    if (!f) throw IoError("write failed for '" + path + "'");
}

SurfaceCsv read_surface_csv(const std::string& path) {
    std::ifstream f = open_in(path);
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(f, line) || strip(line) != "s,t,value")
        throw ParseError(path + ": expected header 's,t,value'");
    ++line_no;

    std::vector<double> s_vals, t_vals, values;
    while (std::getline(f, line)) {
        ++line_no;
        const std::string body = strip(line);
        if (body.empty()) continue;
        const auto fields = split(body, ',');
        if (fields.size() != 3)
            throw ParseError("line " + std::to_string(line_no) + ": expected 3 fields");
        s_vals.push_back(parse_double(fields[0], "s", line_no));
        t_vals.push_back(parse_double(fields[1], "t", line_no));
        values.push_back(parse_double(fields[2], "value", line_no));
    }

    SurfaceCsv out;
    for (double s : s_vals) {
        if (!out.s_grid.empty() && s == out.s_grid.front()) break;
        out.s_grid.push_back(s);
    }
    const std::size_t ns = out.s_grid.size();
    if (ns == 0 || values.size() % ns != 0) throw ParseError(path + ": inconsistent surface layout");
    const std::size_t nt = values.size() / ns;
    for (std::size_t jt = 0; jt < nt; ++jt) out.t_grid.push_back(t_vals[jt * ns]);
    out.values.resize(static_cast<Eigen::Index>(ns), static_cast<Eigen::Index>(nt));
    for (std::size_t jt = 0; jt < nt; ++jt)
        for (std::size_t is = 0; is < ns; ++is)
            out.values(static_cast<Eigen::Index>(is), static_cast<Eigen::Index>(jt)) =
                values[jt * ns + is];
    return out;
}

namespace {

void write_matrix_rows(std::ofstream& f, const Eigen::MatrixXd& m) {
    // one line per column point, entries comma-separated
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            if (r) f << ",";
            f << format_double(m(r, c));
        }
        f << "\n";
    }
}

}  // namespace

void save_fit(const model::ModelFit& fit, const std::string& path) {
    std::ofstream f = open_out(path);
    f << "# lagflm-fit-v1\n[meta]\n";
    f << "basis_order = " << fit.basis1.order() << "\n";
    f << "interior_knots = " << fit.basis1.interior_knots() << "\n";
    f << "lags1 = " << format_double(fit.lags1.lower) << "," << format_double(fit.lags1.upper) << "\n";
    f << "lags2 = " << format_double(fit.lags2.lower) << "," << format_double(fit.lags2.upper) << "\n";
    f << "rho = " << format_double(fit.rho1) << "," << format_double(fit.rho2) << "\n";
    f << "fve = " << format_double(fit.fve) << "\n";
    f << "truncation = " << fit.truncation << "\n";
    f << "noise_x2 = " << format_double(fit.noise_x2) << "\n";
    f << "quad_nodes = " << fit.quad_nodes << "\n";
    f << "kernel = "
      << (fit.smoothing.kernel == smoothing::KernelFamily::epanechnikov ? "epanechnikov" : "gaussian")
      << "\n";
    f << "bandwidth_1d = " << format_double(fit.smoothing.bandwidth_1d) << "\n";
    f << "bandwidth_2d = " << format_double(fit.smoothing.bandwidth_2d) << "\n";
    f << "factor_1d = " << format_double(fit.smoothing.factor_1d) << "\n";
    f << "factor_2d = " << format_double(fit.smoothing.factor_2d) << "\n";
    f << "factor_recovery = " << format_double(fit.smoothing.factor_recovery) << "\n";

    f << "[domain_grid]\n";
    write_values(f, fit.domain_grid);
    f << "[mean_x1]\n";
    write_values(f, fit.mean_x1);
    f << "[mean_x2]\n";
    write_values(f, fit.mean_x2);
    f << "[beta0]\n";
    write_values(f, fit.beta0);
    f << "[eval_grid]\n";
    write_values(f, fit.eval_grid);
    f << "[intercept]\n";
    write_values(f, fit.intercept);
    f << "[b1]\n";
    write_matrix_rows(f, fit.b1);
    f << "[b2]\n";
    write_matrix_rows(f, fit.b2);
    f << "[eigen_grid]\n";
    write_values(f, fit.eig_x2.grid);
    f << "[eigen_values]\n";
    write_values(f, fit.eig_x2.eigenvalues);
    f << "[eigenfunctions]\n";
    if (fit.eig_x2.components() > 0) write_matrix_rows(f, fit.eig_x2.eigenfunctions.transpose());
    f << "[end]\n";
    if (!f) throw IoError("write failed for '" + path + "'");
}

model::ModelFit load_fit(const std::string& path) {
    std::ifstream f = open_in(path);
    std::string line;
    if (!std::getline(f, line) || strip(line) != "# lagflm-fit-v1")
        throw ParseError(path + ": not a lagflm fit artifact");

    std::map<std::string, std::string> meta;
    std::map<std::string, std::vector<std::string>> sections;
    std::string current;
    std::size_t line_no = 1;
    while (std::getline(f, line)) {
        ++line_no;
        const std::string body = strip(line);
        if (body.empty()) continue;
        if (body.front() == '[' && body.back() == ']') {
            current = body.substr(1, body.size() - 2);
            continue;
        }
        if (current == "meta") {
            const auto pos = body.find('=');
            if (pos == std::string::npos)
                throw ParseError("line " + std::to_string(line_no) + ": expected 'key = value'");
            meta[strip(body.substr(0, pos))] = strip(body.substr(pos + 1));
        } else {
            sections[current].push_back(body);
        }
    }

    auto need = [&](const std::string& key) {
        auto it = meta.find(key);
        if (it == meta.end()) throw ParseError(path + ": missing meta key '" + key + "'");
        return it->second;
    };
    auto vec = [&](const std::string& name) {
        std::vector<double> out;
        for (const auto& row : sections[name]) out.push_back(parse_double(row, name, 0));
        return out;
    };
    auto mat = [&](const std::string& name, Eigen::Index rows) {
        const auto& lines = sections[name];
        Eigen::MatrixXd m(rows, static_cast<Eigen::Index>(lines.size()));
        for (std::size_t c = 0; c < lines.size(); ++c) {
            const auto fields = split(lines[c], ',');
            if (static_cast<Eigen::Index>(fields.size()) != rows)
                throw ParseError(path + ": section " + name + " row width mismatch");
            for (Eigen::Index r = 0; r < rows; ++r)
                m(r, static_cast<Eigen::Index>(c)) = parse_double(fields[static_cast<std::size_t>(r)], name, 0);
        }
        return m;
    };

    const int order = static_cast<int>(parse_double(need("basis_order"), "basis_order", 0));
    const int knots = static_cast<int>(parse_double(need("interior_knots"), "interior_knots", 0));
    auto parse_pair = [&](const std::string& s) {
        const auto fields = split(s, ',');
        if (fields.size() != 2) throw ParseError(path + ": expected 'a,b' pair, got '" + s + "'");
        return std::pair<double, double>(parse_double(fields[0], "pair", 0),
                                         parse_double(fields[1], "pair", 0));
    };
    const auto [l1lo, l1hi] = parse_pair(need("lags1"));
    const auto [l2lo, l2hi] = parse_pair(need("lags2"));

    model::ModelFit fit(basis::make_bspline_basis(order, knots, {l1lo, l1hi}),
                        basis::make_bspline_basis(order, knots, {l2lo, l2hi}));
    fit.lags1 = {l1lo, l1hi};
    fit.lags2 = {l2lo, l2hi};
    fit.valid_lower = std::max(l1hi, l2hi);
    const auto [r1, r2] = parse_pair(need("rho"));
    fit.rho1 = r1;
    fit.rho2 = r2;
    fit.fve = parse_double(need("fve"), "fve", 0);
    fit.truncation = static_cast<int>(parse_double(need("truncation"), "truncation", 0));
    fit.noise_x2 = parse_double(need("noise_x2"), "noise_x2", 0);
    fit.quad_nodes = static_cast<int>(parse_double(need("quad_nodes"), "quad_nodes", 0));
    fit.smoothing.kernel = need("kernel") == "gaussian" ? smoothing::KernelFamily::gaussian
                                                        : smoothing::KernelFamily::epanechnikov;
    fit.smoothing.bandwidth_1d = parse_double(need("bandwidth_1d"), "bandwidth_1d", 0);
    fit.smoothing.bandwidth_2d = parse_double(need("bandwidth_2d"), "bandwidth_2d", 0);
    fit.smoothing.factor_1d = parse_double(need("factor_1d"), "factor_1d", 0);
    fit.smoothing.factor_2d = parse_double(need("factor_2d"), "factor_2d", 0);
    fit.smoothing.factor_recovery = parse_double(need("factor_recovery"), "factor_recovery", 0);

    fit.domain_grid = vec("domain_grid");
    fit.mean_x1 = vec("mean_x1");
    fit.mean_x2 = vec("mean_x2");
    fit.beta0 = vec("beta0");
    fit.eval_grid = vec("eval_grid");
    fit.intercept = vec("intercept");
    fit.b1 = mat("b1", fit.basis1.size());
    fit.b2 = mat("b2", fit.basis2.size());
    fit.eig_x2.grid = vec("eigen_grid");
    fit.eig_x2.eigenvalues = vec("eigen_values");
    fit.eig_x2.noise_variance = fit.noise_x2;
    const auto n_comp = static_cast<Eigen::Index>(fit.eig_x2.eigenvalues.size());
    fit.eig_x2.eigenfunctions =
        n_comp > 0 ? mat("eigenfunctions", n_comp).transpose()
                   : Eigen::MatrixXd(static_cast<Eigen::Index>(fit.eig_x2.grid.size()), 0);
    return fit;
}

}  // namespace lagflm::csvio
