#pragma once

#include "restrictlab/cli/report.hpp"
#include "restrictlab/diffop/spec.hpp"
#include "restrictlab/diffop/umatrix.hpp"
#include "restrictlab/opcore/operator.hpp"
#include "restrictlab/restriction/bundle.hpp"
#include "restrictlab/spectral/spectrum.hpp"

#include <json.hpp>

#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace restrictlab::cli {

using json = nlohmann::ordered_json;
using numgrid::cplx;

inline constexpr int kSchemaVersion = 1;

/// Every threshold the commands use, with the library defaults.
struct Tolerances {
    std::map<std::string, double> values{
        {"density", restriction::kDefaultDensityTolerance},
        {"singular", opcore::kDefaultSingularThreshold},
        {"degenerate", diffop::kDefaultDegenerateThreshold},
        {"residual", spectral::kDefaultResidualTolerance},
        {"bracket_gap", spectral::kDefaultBracketGap},
        {"similarity", 1e-6},
        {"conjugation", 1e-11},
        {"identity", 1e-10},
        {"mapping", 1e-5},
        {"pairing", 1e-8},
        {"adjoint_spectrum", 1e-8},
        {"jump", 1e-5},
        {"riesz_drift", 0.10},
        {"biorthogonality", 1e-8},
    };

    double operator[](const std::string& name) const { return values.at(name); }

    void set(const std::string& name, double v, const std::string& where) {
        if (!values.contains(name)) throw ConfigError(where + ": unknown tolerance '" + name + "'");
        if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(where + ": tolerance '" + name + "' must be positive");
        values[name] = v;
    }

    /// NAME=VALUE from the command line.
    void set_from_arg(const std::string& arg) {
        const auto eq = arg.find('=');
        if (eq == std::string::npos) throw ConfigError("--tol " + arg + ": expected NAME=VALUE");
        const std::string name = arg.substr(0, eq), text = arg.substr(eq + 1);
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(text, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != text.size()) throw ConfigError("--tol " + arg + ": value is not a number");
        set(name, v, "--tol");
    }

    spectral::SpectrumOptions spectrum_options() const { return {values.at("bracket_gap"), values.at("residual")}; }
};

struct SigmaConfig {
    std::string mode = "zero";
    std::vector<double> points;
    std::string kind;
    std::vector<double> x;
    std::vector<std::vector<cplx>> values;
    std::vector<std::vector<cplx>> coefficients;
    std::vector<std::vector<cplx>> boundary_values;
};

struct ScenarioConfig {
    int order = 2;
    diffop::BoundaryChoice fixed = diffop::BoundaryChoice::dirichlet_n2;
    double sign = -1.0;
    SigmaConfig sigma;
    numgrid::Scheme scheme = numgrid::Scheme::collocation;
    std::vector<std::size_t> sizes{64, 128, 256};
    std::size_t m = 10;
    Tolerances tol;
    std::string output_dir = "out";
    std::vector<cplx> rhs{1.0};

    std::size_t finest() const { return sizes.back(); }
};

namespace detail {

[[noreturn]] inline void field_error(const std::string& field, const std::string& msg) {
    throw ConfigError("config field '" + field + "': " + msg);
}

inline void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
    if (!j.is_object()) field_error(where.empty() ? "<root>" : where, "expected an object");
    for (const auto& [k, _] : j.items()) {
        bool known = false;
        for (const char* name : keys) known = known || k == name;
        if (!known) field_error(where.empty() ? k : where + "." + k, "unknown field");
    }
}

inline double number(const json& j, const std::string& field) {
    if (!j.is_number()) field_error(field, "expected a number");
    return j.get<double>();
}

inline long long integer(const json& j, const std::string& field) {
    if (!j.is_number_integer()) field_error(field, "expected an integer");
    return j.get<long long>();
}

inline std::string text(const json& j, const std::string& field) {
    if (!j.is_string()) field_error(field, "expected a string");
    return j.get<std::string>();
}

/// A number, or [re, im].
inline cplx complex(const json& j, const std::string& field) {
    if (j.is_number()) return j.get<double>();
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) return {j[0].get<double>(), j[1].get<double>()};
    field_error(field, "expected a number or an [re, im] pair");
}

inline std::vector<double> numbers(const json& j, const std::string& field) {
    if (!j.is_array()) field_error(field, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], field + "[" + std::to_string(i) + "]"));
    return out;
}

inline std::vector<cplx> complexes(const json& j, const std::string& field) {
    if (!j.is_array()) field_error(field, "expected an array");
    std::vector<cplx> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(complex(j[i], field + "[" + std::to_string(i) + "]"));
    return out;
}

inline std::vector<std::vector<cplx>> complex_rows(const json& j, const std::string& field) {
    if (!j.is_array()) field_error(field, "expected an array of arrays");
    std::vector<std::vector<cplx>> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(complexes(j[i], field + "[" + std::to_string(i) + "]"));
    return out;
}

inline json complex_to_json(cplx z) {
    if (z.imag() == 0.0) return z.real();
    return json::array({z.real(), z.imag()});
}

inline json rows_to_json(const std::vector<std::vector<cplx>>& rows) {
    json out = json::array();
    for (const auto& r : rows) {
        json row = json::array();
        for (cplx z : r) row.push_back(complex_to_json(z));
        out.push_back(std::move(row));
    }
    return out;
}

inline std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

} // namespace detail

inline ScenarioConfig parse_config(const json& j) {
    using namespace detail;
    only_keys(j, "", {"schema_version", "order", "fixed", "sign", "sigma", "grid", "m", "tolerances", "output_dir", "rhs"});
    if (!j.contains("schema_version")) field_error("schema_version", "missing");
    if (integer(j["schema_version"], "schema_version") != kSchemaVersion) {
        field_error("schema_version", "unsupported version (expected " + std::to_string(kSchemaVersion) + ")");
    }
    ScenarioConfig c;
    if (j.contains("order")) {
        const auto n = integer(j["order"], "order");
        if (n < 1 || n > 8) field_error("order", "must be between 1 and 8");
        c.order = static_cast<int>(n);
    }
    if (j.contains("fixed")) {
        const auto f = text(j["fixed"], "fixed");
        if (f == "dirichlet_n2") c.fixed = diffop::BoundaryChoice::dirichlet_n2;
        else if (f == "antiperiodic_sum") c.fixed = diffop::BoundaryChoice::antiperiodic_sum;
        else field_error("fixed", "expected \"dirichlet_n2\" or \"antiperiodic_sum\"");
    }
    if (c.fixed == diffop::BoundaryChoice::dirichlet_n2 && c.order != 2) field_error("order", "dirichlet_n2 needs order 2");
    c.sign = diffop::default_sign(c.fixed);
    if (j.contains("sign")) {
        c.sign = number(j["sign"], "sign");
        if (c.sign != 1.0 && c.sign != -1.0) field_error("sign", "must be +1 or -1");
    }

    if (j.contains("sigma")) {
        const json& s = j["sigma"];
        only_keys(s, "sigma", {"mode", "points", "kind", "x", "values", "coefficients", "boundary_values"});
        if (s.contains("mode")) c.sigma.mode = text(s["mode"], "sigma.mode");
        const std::string& mode = c.sigma.mode;
        if (mode == "sign-points") {
            if (!s.contains("points")) field_error("sigma.points", "missing");
            c.sigma.points = numbers(s["points"], "sigma.points");
            if (c.sigma.points.size() != static_cast<std::size_t>(c.order)) field_error("sigma.points", "need exactly `order` points");
            for (std::size_t i = 0; i < c.sigma.points.size(); ++i) {
                const double p = c.sigma.points[i];
                if (!(p > 0.0 && p < 1.0)) field_error("sigma.points", "points must lie strictly inside (0,1)");
                if (i > 0 && !(p > c.sigma.points[i - 1])) field_error("sigma.points", "points must be strictly increasing");
            }
            c.sigma.kind = c.fixed == diffop::BoundaryChoice::dirichlet_n2 ? "paired" : "step";
            if (s.contains("kind")) c.sigma.kind = text(s["kind"], "sigma.kind");
            if (c.sigma.kind != "paired" && c.sigma.kind != "step") field_error("sigma.kind", "expected \"paired\" or \"step\"");
            if (c.sigma.kind == "paired" && (c.fixed != diffop::BoundaryChoice::dirichlet_n2 || c.sign != -1.0)) {
                field_error("sigma.kind", "paired densities need fixed = dirichlet_n2 with sign -1");
            }
        } else if (mode == "tabulated") {
            if (!s.contains("x") || !s.contains("values")) field_error("sigma", "tabulated mode needs x and values");
            c.sigma.x = numbers(s["x"], "sigma.x");
            c.sigma.values = complex_rows(s["values"], "sigma.values");
            if (c.sigma.x.size() < 2 || c.sigma.x.front() != 0.0 || c.sigma.x.back() != 1.0) {
                field_error("sigma.x", "abscissae must start at 0 and end at 1");
            }
            for (std::size_t i = 1; i < c.sigma.x.size(); ++i) {
                if (!(c.sigma.x[i] > c.sigma.x[i - 1])) field_error("sigma.x", "abscissae must be strictly increasing");
            }
            if (c.sigma.values.size() != static_cast<std::size_t>(c.order)) field_error("sigma.values", "need one row per sigma");
            for (std::size_t i = 0; i < c.sigma.values.size(); ++i) {
                if (c.sigma.values[i].size() != c.sigma.x.size()) {
                    field_error("sigma.values[" + std::to_string(i) + "]", "length must match sigma.x");
                }
            }
        } else if (mode == "polynomial") {
            if (!s.contains("coefficients")) field_error("sigma.coefficients", "missing");
            c.sigma.coefficients = complex_rows(s["coefficients"], "sigma.coefficients");
            if (c.sigma.coefficients.size() != static_cast<std::size_t>(c.order)) field_error("sigma.coefficients", "need one row per sigma");
        } else if (mode != "zero") {
            field_error("sigma.mode", "expected zero, sign-points, tabulated or polynomial");
        }
        if (s.contains("boundary_values")) {
            c.sigma.boundary_values = complex_rows(s["boundary_values"], "sigma.boundary_values");
            if (c.sigma.boundary_values.size() != static_cast<std::size_t>(c.order)) {
                field_error("sigma.boundary_values", "need one row per sigma");
            }
            for (const auto& row : c.sigma.boundary_values) {
                if (row.size() != static_cast<std::size_t>(c.order)) field_error("sigma.boundary_values", "each row needs `order` values");
            }
        }
    }

    if (j.contains("grid")) {
        const json& g = j["grid"];
        only_keys(g, "grid", {"scheme", "sizes"});
        if (g.contains("scheme")) {
            const auto s = text(g["scheme"], "grid.scheme");
            if (s == "collocation") c.scheme = numgrid::Scheme::collocation;
            else if (s == "uniform") c.scheme = numgrid::Scheme::uniform;
            else field_error("grid.scheme", "expected \"collocation\" or \"uniform\"");
        }
        if (g.contains("sizes")) {
            if (!g["sizes"].is_array() || g["sizes"].empty()) field_error("grid.sizes", "expected a non-empty array");
            c.sizes.clear();
            for (std::size_t i = 0; i < g["sizes"].size(); ++i) {
                const auto n = integer(g["sizes"][i], "grid.sizes[" + std::to_string(i) + "]");
                if (n < static_cast<long long>(numgrid::kMinGridSize)) field_error("grid.sizes", "grid sizes must be >= 8");
                if (n > 4096) field_error("grid.sizes", "grid sizes above 4096 are not supported");
                c.sizes.push_back(static_cast<std::size_t>(n));
            }
            std::sort(c.sizes.begin(), c.sizes.end());
            c.sizes.erase(std::unique(c.sizes.begin(), c.sizes.end()), c.sizes.end());
        }
    }
    if (j.contains("m")) {
        const auto m = integer(j["m"], "m");
        if (m < 1) field_error("m", "must be >= 1");
        c.m = static_cast<std::size_t>(m);
    }
    if (j.contains("tolerances")) {
        const json& t = j["tolerances"];
        if (!t.is_object()) field_error("tolerances", "expected an object");
        for (const auto& [k, v] : t.items()) c.tol.set(k, number(v, "tolerances." + k), "config field 'tolerances." + k + "'");
    }
    if (j.contains("output_dir")) c.output_dir = text(j["output_dir"], "output_dir");
    if (j.contains("rhs")) {
        c.rhs = complexes(j["rhs"], "rhs");
        if (c.rhs.empty()) field_error("rhs", "need at least one coefficient");
    }
    return c;
}

/// Parses JSON text; syntax errors carry line and column.
inline ScenarioConfig parse_config_text(const std::string& text, const std::string& source = "<config>") {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, col] = detail::line_column(text, e.byte == 0 ? 0 : e.byte - 1);
        std::string msg = e.what();
        if (const auto p = msg.find("syntax error"); p != std::string::npos) msg = msg.substr(p);
        throw ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + msg);
    }
    return parse_config(j);
}

inline ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path + ": cannot open config file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path);
}

/// Normalized echo of the configuration, with every default filled in. The output directory is left out.
inline json to_json(const ScenarioConfig& c) {
    json s{{"mode", c.sigma.mode}};
    if (c.sigma.mode == "sign-points") {
        s["points"] = c.sigma.points;
        s["kind"] = c.sigma.kind;
    } else if (c.sigma.mode == "tabulated") {
        s["x"] = c.sigma.x;
        s["values"] = detail::rows_to_json(c.sigma.values);
    } else if (c.sigma.mode == "polynomial") {
        s["coefficients"] = detail::rows_to_json(c.sigma.coefficients);
    }
    if (!c.sigma.boundary_values.empty()) s["boundary_values"] = detail::rows_to_json(c.sigma.boundary_values);
    json rhs = json::array();
    for (cplx z : c.rhs) rhs.push_back(detail::complex_to_json(z));
    json tol = json::object();
    for (const auto& [k, v] : c.tol.values) tol[k] = v;
    return json{{"schema_version", kSchemaVersion},
                {"order", c.order},
                {"fixed", c.fixed == diffop::BoundaryChoice::dirichlet_n2 ? "dirichlet_n2" : "antiperiodic_sum"},
                {"sign", c.sign},
                {"sigma", std::move(s)},
                {"grid", {{"scheme", numgrid::to_string(c.scheme)}, {"sizes", c.sizes}}},
                {"m", c.m},
                {"tolerances", std::move(tol)},
                {"rhs", std::move(rhs)}};
}

inline diffop::RestrictionSpec make_spec(const ScenarioConfig& c) {
    const auto& s = c.sigma;
    const auto& bc = s.boundary_values;
    if (s.mode == "sign-points") {
        if (s.kind == "paired") return diffop::sign_case_n2(s.points[0], s.points[1], bc);
        std::vector<numgrid::Piecewise> steps;
        for (double x : s.points) steps.push_back(diffop::sign_step(x));
        return diffop::make_spec(c.order, c.fixed, c.sign, std::move(steps), s.points, s.points, bc, "sign");
    }
    if (s.mode == "tabulated") {
        auto spec = diffop::tabulated_spec(c.order, c.fixed, c.sign, s.x, s.values, bc);
        spec.grid_breaks.assign(s.x.begin() + 1, s.x.end() - 1);
        return spec;
    }
    if (s.mode == "polynomial") return diffop::polynomial_spec(c.order, c.fixed, c.sign, s.coefficients, bc);
    if (bc.empty()) return diffop::zero_spec(c.order, c.fixed, c.sign);
    return diffop::make_spec(c.order, c.fixed, c.sign,
                             std::vector<numgrid::Piecewise>(static_cast<std::size_t>(c.order), numgrid::Piecewise::constant(0.0)),
                             {}, {}, bc, "zero");
}

} // namespace restrictlab::cli
