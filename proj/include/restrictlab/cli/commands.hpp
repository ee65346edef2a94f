#pragma once

#include "restrictlab/cli/acceptance.hpp"
#include "restrictlab/cli/config.hpp"
#include "restrictlab/cli/report.hpp"
#include "restrictlab/diffop/n2.hpp"
#include "restrictlab/restriction/bundle.hpp"
#include "restrictlab/spectral/convergence.hpp"
#include "restrictlab/spectral/spectrum.hpp"

#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace restrictlab::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitIo = 1,
    kExitConfig = 2,
    kExitDegenerate = 3,
    kExitNumerical = 4,
    kExitCheckFailed = 5,
};

inline const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"solve",         "spectrum",    "similarity", "adjoint-check",
                                                "probe-lemma21", "riesz-proxy", "converge",   "selftest"};
    return names;
}

/// RESTRICTLAB_THREADS, else the hardware concurrency.
inline std::size_t worker_count() {
    if (const char* env = std::getenv("RESTRICTLAB_THREADS"); env && *env) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (*end != '\0' || v < 1 || v > 1024) throw ConfigError("RESTRICTLAB_THREADS must be an integer in [1, 1024]");
        return static_cast<std::size_t>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

struct CommandResult {
    json report;
    bool pass = true;
    std::vector<std::string> files;
};

namespace commands_detail {

namespace fs = std::filesystem;
using numgrid::cplx;
using numgrid::CVec;
using numgrid::GridFunction;
using numgrid::GridPtr;
using opcore::OperatorMatrix;

struct Context {
    const ScenarioConfig& cfg;
    diffop::RestrictionSpec spec;
    fs::path out;
    CheckList checks;
    CommandResult result;

    void write(const std::string& name, const std::string& content) {
        write_atomic(out / name, content);
        result.files.push_back(name);
    }
};

inline std::string size_tag(std::size_t n) { return "N=" + std::to_string(n); }

inline double max_abs(const CVec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

inline json complex_json(cplx z) { return json::array({z.real(), z.imag()}); }

/// Degenerate kernels are rejected before any matrix is built.
inline diffop::UMatrixData require_nondegenerate(const Context& c) {
    auto u = diffop::build_U(c.spec, c.cfg.tol["degenerate"]);
    if (u.degenerate) throw DegenerateError("L_K not densely defined (det U ≈ 0)", std::abs(u.det));
    return u;
}

inline restriction::RestrictionBundle bundle(const Context& c, std::size_t n) {
    const GridPtr g = c.spec.make_grid(c.cfg.scheme, n);
    const auto f = diffop::fixed_L(c.spec, g);
    return restriction::build_similar(f.L, f.L_inverse, restriction::assemble_K(c.spec, g), c.cfg.tol["density"],
                                      c.cfg.tol["singular"]);
}

inline GridFunction rhs_function(const Context& c, const GridPtr& g) {
    return GridFunction::sample(g, numgrid::Piecewise::polynomial(c.cfg.rhs));
}

inline void solve(Context& c) {
    const auto u_data = require_nondegenerate(c);
    const double tol = c.cfg.tol["mapping"];
    json table = json::array();
    std::vector<GridFunction> solutions;
    for (std::size_t n : c.cfg.sizes) {
        const auto b = bundle(c, n);
        const auto f = rhs_function(c, b.grid());
        const auto u = b.L_K_inverse(f);
        const double eq = numgrid::norm(c.spec.sign * numgrid::differentiate(u, c.spec.order) - f) / numgrid::norm(f);
        const double bc = max_abs(diffop::lk_boundary_residual(u, u_data, c.spec));
        c.checks.at_most(size_tag(n) + ": ||s u^(n) - f|| / ||f||", eq, tol);
        c.checks.at_most(size_tag(n) + ": boundary residual of L_K", bc, tol);
        table.push_back({{"N", n}, {"equation_residual", eq}, {"boundary_residual", bc}, {"norm_u", numgrid::norm(u)}});
        solutions.push_back(u);
    }
    const GridFunction& top = solutions.back();
    const auto fine = numgrid::interpolant(top);
    for (std::size_t i = 0; i + 1 < solutions.size(); ++i) {
        double diff = 0.0;
        const auto& u = solutions[i];
        for (std::size_t j = 0; j < u.grid()->size(); ++j) diff = std::max(diff, std::abs(u[j] - fine(u.grid()->nodes()[j])));
        table[i]["max_difference_to_finest"] = diff;
    }
    CsvTable csv({"x", "re_u", "im_u"});
    for (std::size_t j = 0; j < top.grid()->size(); ++j) {
        csv.row({fmt(top.grid()->nodes()[j]), fmt(top[j].real()), fmt(top[j].imag())});
    }
    c.write("solve.csv", csv.str());
    c.result.report["det_U"] = complex_json(u_data.det);
    c.result.report["grids"] = std::move(table);
}

inline void write_eigenfunctions(Context& c, const std::string& prefix, const spectral::Spectrum& s) {
    for (std::size_t k = 0; k < s.size(); ++k) {
        const auto& v = s.vectors[k];
        std::string re = "# x re\n", im = "# x im\n";
        bool complex = false;
        for (std::size_t j = 0; j < v.grid()->size(); ++j) {
            re += fmt(v.grid()->nodes()[j]) + " " + fmt(v[j].real()) + "\n";
            im += fmt(v.grid()->nodes()[j]) + " " + fmt(v[j].imag()) + "\n";
            complex = complex || v[j].imag() != 0.0;
        }
        char idx[8];
        std::snprintf(idx, sizeof idx, "%02zu", k + 1);
        c.write("eigenfunctions/" + prefix + "_" + idx + "_re.dat", re);
        if (complex) c.write("eigenfunctions/" + prefix + "_" + idx + "_im.dat", im);
    }
}

inline void spectrum(Context& c) {
    require_nondegenerate(c);
    const auto opt = c.cfg.tol.spectrum_options();
    const double tol = c.cfg.tol["similarity"];
    CsvTable csv({"N", "k", "re_LK", "im_LK", "re_AK", "im_AK", "deviation", "max_deviation"});
    json table = json::array();
    for (std::size_t n : c.cfg.sizes) {
        const auto b = bundle(c, n);
        const auto lk = spectral::eigenpairs_from_inverse(b.L_K_inverse, c.cfg.m, opt);
        const auto ak = spectral::eigenpairs_via_inverse(diffop::assemble_AK_diff(c.spec, b.grid(), b.L, c.cfg.tol["degenerate"]),
                                                         c.cfg.m, opt);
        if (lk.size() < c.cfg.m || ak.size() < c.cfg.m) {
            throw NumericalError("fewer than m eigenpairs passed the residual check at " + size_tag(n), 0.0);
        }
        const auto match = spectral::compare_spectra(lk, ak, c.cfg.m, tol);
        for (std::size_t k = 0; k < c.cfg.m; ++k) {
            csv.row({std::to_string(n), std::to_string(k + 1), fmt(lk.values[k].real()), fmt(lk.values[k].imag()),
                     fmt(ak.values[k].real()), fmt(ak.values[k].imag()), fmt(match.deviations[k]), fmt(match.max_deviation)});
        }
        c.checks.at_most(size_tag(n) + ": max relative deviation L_K vs formula A_K", match.max_deviation, tol);
        json values = json::array();
        for (std::size_t k = 0; k < c.cfg.m; ++k) values.push_back(complex_json(lk.values[k]));
        table.push_back({{"N", n}, {"max_deviation", match.max_deviation}, {"brackets", lk.brackets.size()},
                         {"excluded", lk.excluded + ak.excluded}, {"L_K", std::move(values)}});
        if (n == c.cfg.finest()) write_eigenfunctions(c, "LK", lk);
    }
    c.write("spectrum.csv", csv.str());
    c.result.report["grids"] = std::move(table);
}

inline void similarity(Context& c) {
    const auto u = require_nondegenerate(c);
    const auto opt = c.cfg.tol.spectrum_options();
    const double id_tol = c.cfg.tol["identity"];
    json table = json::array();
    for (std::size_t n : c.cfg.sizes) {
        const auto b = bundle(c, n);
        const std::string t = size_tag(n) + ": ";
        const auto r = restriction::identity_residuals(b);
        c.checks.at_most(t + "||(I+KL)(I-KL_K) - I||", r.neumann_left, id_tol);
        c.checks.at_most(t + "||(I-KL_K)(I+KL) - I||", r.neumann_right, id_tol);
        c.checks.at_most(t + "||A_K^-1 - (I+KL)^-1 L_K^-1 (I+KL)||", r.inverse_chain, id_tol);
        const OperatorMatrix direct = opcore::inverse(b.A_K, opcore::Role::generic, c.cfg.tol["singular"]);
        const double inv = restriction::relative_distance(direct, b.A_K_inverse, opcore::operator_norm(b.A_K_inverse));
        c.checks.at_most(t + "||inv(A_K) - L^-1(I+KL)||", inv, id_tol);
        c.checks.add(t + "density agrees with det U", b.density_smin, c.cfg.tol["density"], b.density_flag == !u.degenerate, "sign");

        const auto lk = spectral::eigenpairs_from_inverse(b.L_K_inverse, c.cfg.m, opt);
        const auto conj = spectral::eigenpairs_from_inverse(b.A_K_inverse, c.cfg.m, opt);
        const auto formula = spectral::eigenpairs_via_inverse(diffop::assemble_AK_diff(c.spec, b.grid(), b.L), c.cfg.m, opt);
        const double d_conj = spectral::compare_spectra(lk, conj, c.cfg.m, 1.0).max_deviation;
        const double d_formula = spectral::compare_spectra(lk, formula, c.cfg.m, 1.0).max_deviation;
        c.checks.at_most(t + "spectrum, conjugation route", d_conj, c.cfg.tol["conjugation"]);
        c.checks.at_most(t + "spectrum, formula route", d_formula, c.cfg.tol["similarity"]);
        const double l_norm = opcore::operator_norm(b.L);
        table.push_back({{"N", n},
                         {"density_smin", b.density_smin},
                         {"norm_KL", opcore::operator_norm(b.KL)},
                         {"A_K_minus_L", opcore::operator_norm(b.A_K - b.L) / l_norm},
                         {"neumann_left", r.neumann_left},
                         {"neumann_right", r.neumann_right},
                         {"inverse_chain", r.inverse_chain},
                         {"inverse_direct", inv},
                         {"deviation_conjugation", d_conj},
                         {"deviation_formula", d_formula}});
        if (c.spec.is_zero()) c.checks.at_most(t + "||A_K - L|| / ||L|| for sigma = 0", table.back()["A_K_minus_L"].get<double>(), 0.0);
    }
    c.result.report["det_U"] = complex_json(u.det);
    c.result.report["grids"] = std::move(table);
}

inline bool n2_forms_apply(const diffop::RestrictionSpec& s) {
    return s.order == 2 && s.fixed == diffop::BoundaryChoice::dirichlet_n2 && s.sign == -1.0;
}

inline void adjoint_check(Context& c) {
    require_nondegenerate(c);
    const auto opt = c.cfg.tol.spectrum_options();
    json table = json::array();
    for (std::size_t n : c.cfg.sizes) {
        const auto b = bundle(c, n);
        const GridPtr& g = b.grid();
        const std::string t = size_tag(n) + ": ";
        const auto as = restriction::build_adjoint_similar(b);
        std::mt19937 rng(17);
        std::normal_distribution<double> dist;
        auto random = [&] {
            CVec v(static_cast<Eigen::Index>(g->size()));
            for (auto& x : v) x = cplx(dist(rng), dist(rng));
            return b.L_inverse(GridFunction(g, v));
        };
        double pairing = 0.0;
        for (int k = 0; k < 20; ++k) {
            const auto v = random(), w = random();
            const double r = std::abs(numgrid::inner_product(b.A_K(v), w) - numgrid::inner_product(v, as(w)));
            pairing = std::max(pairing, r / (numgrid::norm(v) * numgrid::norm(w)));
        }
        c.checks.at_most(t + "pairing residual", pairing, c.cfg.tol["pairing"]);

        const auto ak = spectral::eigenpairs_from_inverse(b.A_K_inverse, c.cfg.m, opt);
        const auto adj = spectral::eigenpairs_from_inverse(restriction::adjoint_inverse_classical(b, c.spec), c.cfg.m, opt);
        std::vector<cplx> conj;
        for (cplx z : ak.values) conj.push_back(std::conj(z));
        const double dev = spectral::compare_spectra(conj, adj.values, c.cfg.m, 1.0).max_deviation;
        c.checks.at_most(t + "eig(A_K*) vs conj eig(A_K)", dev, c.cfg.tol["adjoint_spectrum"]);
        json row{{"N", n}, {"pairing", pairing}, {"spectrum_deviation", dev},
                 {"domain_containment", restriction::domain_containment_angle(b, c.spec)}};
        if (n2_forms_apply(c.spec) && c.spec.points.size() == 2) {
            const auto forms = diffop::n2_closed_forms(c.spec, g, c.cfg.tol["degenerate"]);
            double jump = 0.0;
            for (const auto& v : adj.vectors) jump = std::max(jump, max_abs(diffop::adjoint_domain_residual(v, forms)));
            c.checks.at_most(t + "jump conditions of A_K* eigenvectors", jump, c.cfg.tol["jump"]);
            row["jump_residual"] = jump;
        } else {
            row["jump_residual"] = "not applicable";
        }
        table.push_back(std::move(row));
    }
    c.result.report["grids"] = std::move(table);
}

inline void probe(Context& c) {
    const auto r = restriction::kl_probe(c.spec, c.cfg.scheme, c.cfg.sizes);
    CsvTable csv({"N", "norm_KL", "ratio_to_first"});
    json table = json::array();
    for (std::size_t i = 0; i < r.sizes.size(); ++i) {
        const double ratio = r.norms.front() > 0.0 ? r.norms[i] / r.norms.front() : 0.0;
        csv.row({std::to_string(r.sizes[i]), fmt(r.norms[i]), fmt(ratio)});
        table.push_back({{"N", r.sizes[i]}, {"norm_KL", r.norms[i]}, {"ratio_to_first", ratio}});
    }
    const bool admissible = c.spec.admissible();
    const std::string expected = admissible ? "bounded" : "unbounded";
    c.checks.add("verdict matches admissibility", r.verdict == expected ? 1.0 : 0.0, 1.0, r.verdict == expected, "==");
    c.write("probe-lemma21.csv", csv.str());
    c.result.report["admissible"] = admissible;
    c.result.report["expected"] = expected;
    c.result.report["verdict"] = r.verdict;
    c.result.report["grids"] = std::move(table);
}

inline void riesz(Context& c) {
    require_nondegenerate(c);
    CsvTable csv({"N", "count", "condition", "biorthogonality_error", "rank_deficient"});
    json table = json::array();
    std::vector<double> cond;
    for (std::size_t n : c.cfg.sizes) {
        const auto b = bundle(c, n);
        const auto s = spectral::eigenpairs_from_inverse(b.L_K_inverse, c.cfg.m, c.cfg.tol.spectrum_options());
        const auto r = spectral::riesz_gram_proxy(s, c.cfg.m);
        csv.row({std::to_string(n), std::to_string(r.count), fmt(r.condition), fmt(r.biorthogonality_error),
                 r.rank_deficient ? "1" : "0"});
        table.push_back({{"N", n}, {"count", r.count}, {"condition", r.condition},
                         {"biorthogonality_error", r.biorthogonality_error}, {"rank_deficient", r.rank_deficient}});
        c.checks.at_most(size_tag(n) + ": biorthogonality error", r.biorthogonality_error, c.cfg.tol["biorthogonality"]);
        c.checks.add(size_tag(n) + ": brackets have full rank", r.rank_deficient ? 1.0 : 0.0, 0.0, !r.rank_deficient, "==");
        cond.push_back(r.condition);
    }
    if (cond.size() >= 2) {
        const double a = cond[cond.size() - 2], b = cond.back();
        c.checks.below("condition drift over the last two grids", std::abs(b - a) / a, c.cfg.tol["riesz_drift"]);
    }
    c.write("riesz-proxy.csv", csv.str());
    c.result.report["grids"] = std::move(table);
}

inline void converge(Context& c) {
    require_nondegenerate(c);
    if (c.cfg.sizes.size() < 3) throw ConfigError("config field 'grid.sizes': converge needs at least 3 sizes");
    const auto spec = c.spec;
    const auto cfg = c.cfg;
    const spectral::Scenario scenario = [spec, cfg](std::size_t n) {
        const auto g = spec.make_grid(cfg.scheme, n);
        const auto f = diffop::fixed_L(spec, g);
        const auto lk = restriction::restriction_inverse(f.L_inverse, restriction::assemble_K(spec, g));
        auto s = spectral::eigenpairs_from_inverse(lk, cfg.m, cfg.tol.spectrum_options());
        if (s.size() < cfg.m) throw NumericalError("fewer than m eigenpairs passed the residual check", 0.0);
        return s.values;
    };
    std::optional<std::vector<cplx>> exact;
    if (spec.is_zero() && spec.fixed == diffop::BoundaryChoice::dirichlet_n2) {
        exact.emplace();
        for (std::size_t k = 1; k <= c.cfg.m; ++k) exact->push_back(std::pow(static_cast<double>(k) * std::numbers::pi, 2));
    }
    const auto r = spectral::convergence_sweep(scenario, c.cfg.sizes, c.cfg.m, exact, worker_count());
    if (r.failed) throw NumericalError("convergence sweep failed: " + r.reason, 0.0);
    CsvTable csv({"N", "k", "re", "im", "relative_error"});
    for (std::size_t i = 0; i < r.sizes.size(); ++i) {
        for (std::size_t k = 0; k < r.values[i].size() && k < c.cfg.m; ++k) {
            const bool has_error = i < r.errors.size() && k < r.errors[i].size();
            csv.row({std::to_string(r.sizes[i]), std::to_string(k + 1), fmt(r.values[i][k].real()), fmt(r.values[i][k].imag()),
                     has_error ? fmt(r.errors[i][k]) : ""});
        }
    }
    json table = json::array();
    for (std::size_t i = 0; i < r.max_errors.size(); ++i) table.push_back({{"N", r.sizes[i]}, {"max_error", r.max_errors[i]}});
    const double first = r.max_errors.front(), last = r.max_errors.back();
    c.checks.add("errors do not grow (or sit below 1e-10)", last, first, last <= first || last <= 1e-10, "<=");
    c.write("converge.csv", csv.str());
    c.result.report["reference"] = exact ? "exact" : "finest grid";
    c.result.report["order"] = r.order ? json(*r.order) : json(nullptr);
    c.result.report["grids"] = std::move(table);
}

} // namespace commands_detail

/// Runs one subcommand and writes <out>/<command>.json plus its tables.
inline CommandResult run_command(const std::string& command, const ScenarioConfig& cfg) {
    namespace d = commands_detail;
    static const std::map<std::string, std::function<void(d::Context&)>> table{
        {"solve", d::solve},         {"spectrum", d::spectrum},       {"similarity", d::similarity},
        {"adjoint-check", d::adjoint_check}, {"probe-lemma21", d::probe}, {"riesz-proxy", d::riesz},
        {"converge", d::converge},
    };
    const auto it = table.find(command);
    if (it == table.end()) throw ConfigError("unknown command '" + command + "'");
    d::Context c{cfg, make_spec(cfg), cfg.output_dir, {}, {}};
    c.result.report = json{{"command", command}, {"scenario", to_json(cfg)}};
    it->second(c);
    c.result.report["checks"] = c.checks.json();
    c.result.pass = c.checks.all_pass();
    c.result.report["pass"] = c.result.pass;
    c.write(command + ".json", c.result.report.dump(2) + "\n");
    return std::move(c.result);
}

} // namespace restrictlab::cli
