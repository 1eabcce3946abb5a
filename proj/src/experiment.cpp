#include "freeclt/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "freeclt/error.hpp"
#include "freeclt/semicircle.hpp"

namespace freeclt {

namespace {

using nlohmann::json;

[[noreturn]] void config_fail(const std::string& what) { throw ConfigError("config: " + what); }

template <typename T>
T get_as(const json& j, const char* key, const std::string& where) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        config_fail(where + ": missing or malformed key '" + key + "'");
    }
}

std::string eps_label(double eps) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", eps);
    return buf;
}

// Re-raises a failure for one row of a sweep with the offending n.
template <typename F>
auto for_n(int n, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const NumericalFailure& e) {
        throw NumericalFailure("n = " + std::to_string(n) + ": " + e.what());
    } catch (const InvalidInput& e) {
        throw InvalidInput("n = " + std::to_string(n) + ": " + e.what());
    }
}

void require_n_values(const ExperimentConfig& c) {
    if (c.n_values.empty()) config_fail("n_values must be a nonempty list");
}

ConvolutionParams with_threads(ConvolutionParams p, unsigned threads) {
    p.threads = threads;
    return p;
}

std::string xml_escape(const std::string& text) {
    std::string out;
    for (char ch : text) {
        switch (ch) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += ch;
        }
    }
    return out;
}

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

std::string FamilySpec::label() const {
    std::ostringstream os;
    switch (kind) {
        case Kind::Rademacher: return "rademacher";
        case Kind::TwoPoint: os << "two_point(p=" << p << ")"; break;
        case Kind::Uniform: os << "uniform(half_width=" << half_width << ")"; break;
        case Kind::TruncatedPower: os << "truncated_power(delta=" << delta << ", cut=" << cut << ")"; break;
        case Kind::LindebergCounterexample: return "lindeberg_counterexample";
        case Kind::Mixed:
            os << "mixed(";
            for (std::size_t i = 0; i < members.size(); ++i) os << (i ? ", " : "") << members[i].label();
            os << ")";
            break;
    }
    return os.str();
}

Measure two_point(double p) {
    if (!(p > 0.0 && p < 1.0)) throw InvalidInput("two_point: p must lie in (0, 1)");
    return Measure::discrete({{-std::sqrt(p / (1.0 - p)), 1.0 - p}, {std::sqrt((1.0 - p) / p), p}});
}

Measure truncated_power(double delta, double cut) {
    if (!(delta > 0.0) || !(cut > 0.0)) throw InvalidInput("truncated_power: delta and cut must be positive");
    if (!(cut < 1.0) || !(cut * cut * (2.0 + delta) / delta > 1.0))
        throw InvalidInput("truncated_power: unit variance needs cut < 1 < cut * sqrt((2 + delta) / delta)");
    const double s = 3.0 + delta;
    auto variance = [&](double k) {
        const double num = (std::pow(cut, -delta) - std::pow(k, -delta)) / delta;
        const double den = (std::pow(cut, 1.0 - s) - std::pow(k, 1.0 - s)) / (s - 1.0);
        return num / den;
    };
    double lo = cut, hi = 2.0;
    for (int i = 0; i < 400 && variance(hi) < 1.0; ++i) hi *= 2.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (variance(mid) < 1.0 ? lo : hi) = mid;
    }
    const double k = 0.5 * (lo + hi);

    constexpr int kSide = 512;
    std::vector<double> pos(kSide);
    for (int i = 0; i < kSide; ++i) pos[i] = cut * std::pow(k / cut, static_cast<double>(i) / (kSide - 1));
    pos.back() = k;
    std::vector<double> grid, density;
    for (int i = kSide - 1; i >= 0; --i) {
        grid.push_back(-pos[i]);
        density.push_back(std::pow(pos[i], -s));
    }
    const double gap = cut * 1e-9;
    grid.push_back(-cut + gap);
    density.push_back(0.0);
    grid.push_back(cut - gap);
    density.push_back(0.0);
    for (int i = 0; i < kSide; ++i) {
        grid.push_back(pos[i]);
        density.push_back(std::pow(pos[i], -s));
    }
    double mass = 0.0;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i)
        mass += 0.5 * (density[i] + density[i + 1]) * (grid[i + 1] - grid[i]);
    for (auto& v : density) v /= mass;
    const double m2 = moment(Measure::from_parts({}, grid, density), 2);
    const double stretch = 1.0 / std::sqrt(m2);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        grid[i] *= stretch;
        density[i] /= stretch;
    }
    return Measure::from_parts({}, std::move(grid), std::move(density));
}

std::vector<Measure> family_row(const FamilySpec& family, int n) {
    if (n < 1) throw InvalidInput("family_row: n must be positive");
    using Kind = FamilySpec::Kind;
    switch (family.kind) {
        case Kind::Rademacher: return std::vector<Measure>(n, Measure::rademacher());
        case Kind::TwoPoint: return std::vector<Measure>(n, two_point(family.p));
        case Kind::Uniform:
            if (!(family.half_width > 0.0)) throw InvalidInput("uniform: half_width must be positive");
            return std::vector<Measure>(n, Measure::uniform(-family.half_width, family.half_width));
        case Kind::TruncatedPower: return std::vector<Measure>(n, truncated_power(family.delta, family.cut));
        case Kind::Mixed: {
            if (family.members.empty()) throw InvalidInput("mixed: no members");
            std::vector<Measure> base;
            for (const auto& m : family.members) base.push_back(family_row(m, 1).front());
            std::vector<Measure> out;
            for (int j = 0; j < n; ++j) out.push_back(base[j % base.size()]);
            return out;
        }
        case Kind::LindebergCounterexample: {
            // The last summand carries half of B_n^2 at distance sqrt(n - 1),
            // beyond eps B_n for every eps < 1/sqrt(2).
            std::vector<Measure> out(n - 1, Measure::rademacher());
            const double a = std::max(1.0, std::sqrt(static_cast<double>(n - 1)));
            out.push_back(Measure::discrete({{-a, 0.5}, {a, 0.5}}));
            return out;
        }
    }
    throw InvalidInput("family_row: unknown family");
}

FamilySpec family_from_json(const json& j) {
    FamilySpec f;
    const std::string name = j.is_string() ? j.get<std::string>() : get_as<std::string>(j, "name", "family");
    using Kind = FamilySpec::Kind;
    if (name == "rademacher") {
        f.kind = Kind::Rademacher;
    } else if (name == "two_point") {
        f.kind = Kind::TwoPoint;
        f.p = get_as<double>(j, "p", "two_point");
        if (!(f.p > 0.0 && f.p < 1.0)) config_fail("two_point: p must lie in (0, 1)");
    } else if (name == "uniform") {
        f.kind = Kind::Uniform;
        f.half_width = get_as<double>(j, "half_width", "uniform");
        if (!(f.half_width > 0.0)) config_fail("uniform: half_width must be positive");
    } else if (name == "truncated_power") {
        f.kind = Kind::TruncatedPower;
        f.delta = get_as<double>(j, "delta", "truncated_power");
        f.cut = get_as<double>(j, "cut", "truncated_power");
    } else if (name == "mixed") {
        f.kind = Kind::Mixed;
        if (!j.contains("members") || !j["members"].is_array() || j["members"].empty())
            config_fail("mixed: 'members' must be a nonempty list");
        for (const auto& m : j["members"]) f.members.push_back(family_from_json(m));
    } else if (name == "lindeberg_counterexample") {
        f.kind = Kind::LindebergCounterexample;
    } else {
        config_fail("unknown family '" + name + "'");
    }
    return f;
}

ExperimentConfig config_from_json(const json& j) {
    if (!j.is_object()) config_fail("top level must be an object");
    ExperimentConfig c;
    if (j.contains("family")) c.family = family_from_json(j["family"]);
    if (j.contains("n_values")) {
        const auto& nv = j["n_values"];
        if (!nv.is_array()) config_fail("n_values must be a list");
        for (const auto& v : nv) {
            if (!v.is_number_integer() || v.get<long long>() < 1) config_fail("n_values must be positive integers");
            c.n_values.push_back(v.get<int>());
        }
        for (std::size_t i = 1; i < c.n_values.size(); ++i)
            if (c.n_values[i] <= c.n_values[i - 1]) config_fail("n_values must be strictly increasing");
    }
    if (j.contains("epsilons")) {
        c.epsilons.clear();
        if (!j["epsilons"].is_array() || j["epsilons"].empty()) config_fail("epsilons must be a nonempty list");
        for (const auto& v : j["epsilons"]) {
            if (!v.is_number()) config_fail("epsilons must be numbers");
            const double e = v.get<double>();
            if (!(e > 0.0 && e <= 1.0)) config_fail("every epsilon must lie in (0, 1]");
            c.epsilons.push_back(e);
        }
    }
    if (j.contains("g")) {
        const auto& g = j["g"];
        if (g.is_number()) {
            c.g = GrowthFunction::abs_power(g.get<double>());
            c.cor_delta = g.get<double>();
        } else if (g.is_object() && g.contains("power")) {
            c.cor_delta = get_as<double>(g, "power", "g");
            c.g = GrowthFunction::abs_power(c.cor_delta);
        } else if (g.is_object() && g.value("name", "") == "log1p") {
            c.g = GrowthFunction::log1p_abs();
        } else {
            config_fail("g must be {\"power\": delta} or {\"name\": \"log1p\"}");
        }
    }
    if (j.contains("cor_delta")) c.cor_delta = get_as<double>(j, "cor_delta", "top level");
    if (!(c.cor_delta > 0.0 && c.cor_delta <= 1.0)) config_fail("cor_delta must lie in (0, 1]");
    if (j.contains("conv_params")) {
        const auto& p = j["conv_params"];
        if (!p.is_object()) config_fail("conv_params must be an object");
        try {
            c.conv.eta = p.value("eta", c.conv.eta);
            c.conv.grid_points = p.value("grid_points", c.conv.grid_points);
            c.conv.fp_tol = p.value("fp_tol", c.conv.fp_tol);
            c.conv.fp_max_iter = p.value("fp_max_iter", c.conv.fp_max_iter);
            c.conv.mass_defect_limit = p.value("mass_defect_limit", c.conv.mass_defect_limit);
            c.conv.refine_tol = p.value("refine_tol", c.conv.refine_tol);
        } catch (const json::exception&) {
            config_fail("conv_params: malformed value");
        }
        try {
            c.conv.validate();
        } catch (const InvalidInput& e) {
            config_fail(e.what());
        }
    }
    if (j.contains("oracle")) {
        const auto& o = j["oracle"];
        if (!o.is_object()) config_fail("oracle must be an object");
        EnsembleSpec spec;
        try {
            spec.matrix_size = o.value("matrix_size", spec.matrix_size);
            spec.trials = o.value("trials", spec.trials);
            spec.seed = o.value("seed", spec.seed);
        } catch (const json::exception&) {
            config_fail("oracle: malformed value");
        }
        const std::string solver = o.value("solver", std::string("tridiagonal"));
        if (solver == "jacobi") spec.solver = EigenSolver::Jacobi;
        else if (solver != "tridiagonal") config_fail("oracle.solver must be 'tridiagonal' or 'jacobi'");
        try {
            spec.validate();
        } catch (const InvalidInput& e) {
            config_fail(e.what());
        }
        c.oracle = spec;
    }
    if (j.contains("output_prefix")) c.output_prefix = get_as<std::string>(j, "output_prefix", "top level");
    if (j.contains("record_timing")) c.record_timing = get_as<bool>(j, "record_timing", "top level");
    try {
        if (j.contains("mu")) c.mu = measure_from_json(j["mu"]);
        if (j.contains("nu")) c.nu = measure_from_json(j["nu"]);
    } catch (const InvalidInput& e) {
        config_fail(std::string("measure: ") + e.what());
    }
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) config_fail("cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        config_fail("'" + path + "' is not valid JSON: " + e.what());
    }
    return config_from_json(j);
}

std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

std::string Table::to_csv() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
        out += '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    return out;
}

Table Table::from_csv(const std::string& text) {
    Table t;
    std::istringstream in(text);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (first) {
            t.header = std::move(cells);
            first = false;
        } else {
            if (cells.size() != t.header.size()) throw InvalidInput("csv: row width differs from header");
            t.rows.push_back(std::move(cells));
        }
    }
    if (first) throw InvalidInput("csv: empty input");
    return t;
}

std::string svg_plot(const Table& table, const std::string& title) {
    constexpr double kW = 720, kH = 480, kLeft = 70, kRight = 190, kTop = 40, kBottom = 50;
    static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                    "#8c564b", "#e377c2", "#17becf", "#7f7f7f", "#bcbd22"};
    auto parse = [](const std::string& s, double& v) {
        char* end = nullptr;
        v = std::strtod(s.c_str(), &end);
        return end != s.c_str() && *end == '\0' && std::isfinite(v) && v > 0.0;
    };
    const std::vector<std::string> skip{"fitted_c", "mass_defect", "wall_ms"};
    struct Series {
        std::string name;
        std::vector<std::pair<double, double>> pts;
    };
    std::vector<Series> series;
    for (std::size_t c = 1; c < table.header.size(); ++c) {
        if (std::find(skip.begin(), skip.end(), table.header[c]) != skip.end()) continue;
        Series s{table.header[c], {}};
        for (const auto& r : table.rows) {
            double x, y;
            if (parse(r[0], x) && parse(r[c], y)) s.pts.emplace_back(std::log10(x), std::log10(y));
        }
        if (!s.pts.empty()) series.push_back(std::move(s));
    }
    double x0 = 0, x1 = 1, y0 = -1, y1 = 0;
    bool any = false;
    for (const auto& s : series)
        for (const auto& [x, y] : s.pts) {
            if (!any) x0 = x1 = x, y0 = y1 = y, any = true;
            x0 = std::min(x0, x), x1 = std::max(x1, x), y0 = std::min(y0, y), y1 = std::max(y1, y);
        }
    x0 = std::floor(x0), x1 = std::max(std::ceil(x1), x0 + 1);
    y0 = std::floor(y0), y1 = std::max(std::ceil(y1), y0 + 1);
    const double pw = kW - kLeft - kRight, ph = kH - kTop - kBottom;
    auto px = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * pw; };
    auto py = [&](double y) { return kTop + (y1 - y) / (y1 - y0) * ph; };

    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(2);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\" viewBox=\"0 0 "
       << kW << ' ' << kH << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << kLeft + pw / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << xml_escape(title)
       << "</text>\n";
    for (double d = x0; d <= x1 + 1e-9; d += 1.0) {
        for (int m = 1; m < 10 && d + std::log10(m) <= x1 + 1e-9; ++m) {
            const double x = px(d + std::log10(m));
            os << "<line x1=\"" << x << "\" y1=\"" << kTop << "\" x2=\"" << x << "\" y2=\"" << kTop + ph
               << "\" stroke=\"" << (m == 1 ? "#bbb" : "#eee") << "\"/>\n";
        }
        os << "<text x=\"" << px(d) << "\" y=\"" << kTop + ph + 18 << "\" text-anchor=\"middle\">1e" << static_cast<int>(d)
           << "</text>\n";
    }
    for (double d = y0; d <= y1 + 1e-9; d += 1.0) {
        for (int m = 1; m < 10 && d + std::log10(m) <= y1 + 1e-9; ++m) {
            const double y = py(d + std::log10(m));
            os << "<line x1=\"" << kLeft << "\" y1=\"" << y << "\" x2=\"" << kLeft + pw << "\" y2=\"" << y
               << "\" stroke=\"" << (m == 1 ? "#bbb" : "#eee") << "\"/>\n";
        }
        os << "<text x=\"" << kLeft - 6 << "\" y=\"" << py(d) + 4 << "\" text-anchor=\"end\">1e" << static_cast<int>(d)
           << "</text>\n";
    }
    os << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    os << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kH - 10 << "\" text-anchor=\"middle\">"
       << (table.header.empty() ? "" : xml_escape(table.header[0])) << "</text>\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
        const char* color = kColors[i % (sizeof kColors / sizeof *kColors)];
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (const auto& [x, y] : series[i].pts) os << px(x) << ',' << py(y) << ' ';
        os << "\"/>\n";
        const double ly = kTop + 10 + 18.0 * static_cast<double>(i);
        os << "<line x1=\"" << kLeft + pw + 12 << "\" y1=\"" << ly << "\" x2=\"" << kLeft + pw + 36 << "\" y2=\""
           << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << kLeft + pw + 42 << "\" y=\"" << ly + 4 << "\">" << xml_escape(series[i].name) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

std::vector<SweepPoint> clt_sweep(const ExperimentConfig& config, unsigned threads) {
    require_n_values(config);
    const auto params = with_threads(config.conv, threads);
    std::vector<SweepPoint> out;
    for (int n : config.n_values) {
        out.push_back(for_n(n, [&] {
            const auto t0 = std::chrono::steady_clock::now();
            const auto row = build_row(family_row(config.family, n));
            ConvolutionDiagnostics diag;
            const Measure mu_n = clt_sum(row, params, &diag);
            SweepPoint p;
            p.n = n;
            p.delta = kolmogorov_distance(mu_n, SemicircleLaw::standard());
            p.report = bound_report(row, p.delta, config.epsilons, config.g, config.cor_delta);
            p.mass_defect = diag.mass_defect;
            p.wall_ms = config.record_timing ? elapsed_ms(t0) : 0.0;
            return p;
        }));
    }
    std::vector<std::pair<double, double>> pairs;
    for (const auto& p : out) pairs.emplace_back(p.delta, p.report.rhs_cg);
    const double c = fit_constant(pairs);
    for (auto& p : out) p.report.fitted_c = c;
    return out;
}

Table clt_sweep_table(const ExperimentConfig& config, const std::vector<SweepPoint>& points) {
    Table t;
    t.header = {"n", "delta", "rhs_cg"};
    for (double e : config.epsilons) t.header.push_back("rhs_thm3_eps" + eps_label(e));
    for (const char* h : {"rhs_thm4", "rhs_cor", "fitted_c", "mass_defect", "wall_ms"}) t.header.push_back(h);
    for (const auto& p : points) {
        std::vector<std::string> r{std::to_string(p.n), format_number(p.delta), format_number(p.report.rhs_cg)};
        for (double e : config.epsilons) r.push_back(format_number(p.report.rhs_thm3.at(e)));
        r.push_back(format_number(p.report.rhs_thm4.value_or(NAN)));
        r.push_back(format_number(p.report.rhs_cor.value_or(NAN)));
        r.push_back(format_number(p.report.fitted_c));
        r.push_back(format_number(p.mass_defect));
        r.push_back(format_number(p.wall_ms));
        t.rows.push_back(std::move(r));
    }
    return t;
}

LindebergResult lindeberg_demo(const ExperimentConfig& config, unsigned threads) {
    require_n_values(config);
    const auto params = with_threads(config.conv, threads);
    std::vector<std::vector<double>> lambdas;  // [n index][eps index]
    std::vector<double> deltas;
    for (int n : config.n_values) {
        for_n(n, [&] {
            const auto row = build_row(family_row(config.family, n));
            std::vector<double> l;
            for (double e : config.epsilons) l.push_back(lambda_n(row, e));
            lambdas.push_back(std::move(l));
            deltas.push_back(kolmogorov_distance(clt_sum(row, params), SemicircleLaw::standard()));
            return 0;
        });
    }
    // Finite-sweep verdict: for some eps, Lambda_n(eps) at the largest n is
    // still at least 0.1 and has not fallen below half its sweep maximum.
    LindebergResult res;
    for (std::size_t e = 0; e < config.epsilons.size(); ++e) {
        double peak = 0.0;
        for (const auto& l : lambdas) peak = std::max(peak, l[e]);
        const double last = lambdas.back()[e];
        if (last >= 0.1 && last >= 0.5 * peak) res.violated = true;
    }
    res.table.header = {"n"};
    for (double e : config.epsilons) res.table.header.push_back("lambda_eps" + eps_label(e));
    res.table.header.push_back("delta");
    res.table.header.push_back("lindeberg");
    for (std::size_t i = 0; i < config.n_values.size(); ++i) {
        std::vector<std::string> r{std::to_string(config.n_values[i])};
        for (double v : lambdas[i]) r.push_back(format_number(v));
        r.push_back(format_number(deltas[i]));
        r.push_back(res.violated ? "Lindeberg violated" : "holds");
        res.table.rows.push_back(std::move(r));
    }
    return res;
}

Table oracle_check(const ExperimentConfig& config, unsigned threads) {
    require_n_values(config);
    if (!config.oracle) config_fail("oracle-check needs an 'oracle' section");
    const auto params = with_threads(config.conv, threads);
    Table t;
    t.header = {"n", "delta_oracle", "flag"};
    for (int n : config.n_values) {
        for_n(n, [&] {
            const auto row = build_row(family_row(config.family, n));
            const Measure analytic = clt_sum(row, params);
            std::vector<Measure> scaled;
            for (const auto& m : row.measures) scaled.push_back(affine_pushforward(m, row.b_n(), 0.0));
            const Measure esd = free_sum_esd(scaled, *config.oracle, threads);
            const double d = kolmogorov_distance(analytic, esd);
            t.rows.push_back({std::to_string(n), format_number(d), d > kOracleFlag ? "1" : "0"});
            return 0;
        });
    }
    return t;
}

Table bounds_report(const ExperimentConfig& config, unsigned threads) {
    require_n_values(config);
    const auto params = with_threads(config.conv, threads);
    Table t;
    t.header = {"n", "b_n"};
    for (double e : config.epsilons) t.header.push_back("lambda_eps" + eps_label(e));
    for (double e : config.epsilons) t.header.push_back("ell_eps" + eps_label(e));
    t.header.push_back("rhs_cg");
    for (double e : config.epsilons) t.header.push_back("rhs_thm3_eps" + eps_label(e));
    for (const char* h : {"rhs_thm4", "rhs_cor", "gamma_n", "m_n", "n_n", "delta_n", "rhs_thm2", "delta"})
        t.header.push_back(h);
    for (int n : config.n_values) {
        for_n(n, [&] {
            const auto row = build_row(family_row(config.family, n));
            const double delta = kolmogorov_distance(clt_sum(row, params), SemicircleLaw::standard());
            const auto rep = bound_report(row, delta, config.epsilons, config.g, config.cor_delta);
            const auto sum = summarize_truncation(row, params);
            std::vector<std::string> r{std::to_string(n), format_number(row.b_n())};
            for (double e : config.epsilons) r.push_back(format_number(rep.lambda.at(e)));
            for (double e : config.epsilons) r.push_back(format_number(rep.ell.at(e)));
            r.push_back(format_number(rep.rhs_cg));
            for (double e : config.epsilons) r.push_back(format_number(rep.rhs_thm3.at(e)));
            r.push_back(format_number(rep.rhs_thm4.value_or(NAN)));
            r.push_back(format_number(rep.rhs_cor.value_or(NAN)));
            r.push_back(format_number(sum.gamma_n));
            r.push_back(format_number(sum.m_n));
            r.push_back(format_number(sum.n_n()));
            r.push_back(format_number(sum.delta_n));
            r.push_back(format_number(rhs_thm2(sum, row.b_n(), 0.0)));
            r.push_back(format_number(delta));
            t.rows.push_back(std::move(r));
            return 0;
        });
    }
    return t;
}

void write_output(const std::string& prefix, const std::string& ext, const std::string& content) {
    const std::filesystem::path path(prefix + "." + ext);
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << content;
}

}  // namespace freeclt
