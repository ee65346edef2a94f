#pragma once

#include "restrictlab/cli/report.hpp"
#include "restrictlab/diffop/n2.hpp"
#include "restrictlab/restriction/bundle.hpp"
#include "restrictlab/spectral/spectrum.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

namespace restrictlab::cli {

struct CriterionResult {
    int id = 0;
    std::string title;
    bool pass = false;
    CheckList checks;
    std::string error;
};

struct AcceptanceReport {
    std::vector<CriterionResult> criteria;

    bool all_pass() const {
        for (const auto& c : criteria) {
            if (!c.pass) return false;
        }
        return true;
    }
};

/// Exit status of a shell command, or -1 when it did not exit normally.
inline int run_process(const std::string& command) {
    const int status = std::system(command.c_str());
    if (status == -1 || !WIFEXITED(status)) return -1;
    return WEXITSTATUS(status);
}

inline std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) out += c == '\'' ? std::string("'\\''") : std::string(1, c);
    return out + "'";
}

namespace acceptance_detail {

using numgrid::cplx;
using numgrid::CMat;
using numgrid::CVec;
using numgrid::GridFunction;
using numgrid::GridPtr;
using numgrid::Scheme;
using opcore::OperatorMatrix;

inline double max_abs(const CVec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

inline GridFunction random_function(const GridPtr& g, std::mt19937& rng) {
    std::normal_distribution<double> d;
    CVec v(static_cast<Eigen::Index>(g->size()));
    for (auto& x : v) x = cplx(d(rng), d(rng));
    return {g, v};
}

inline void baseline(CheckList& c) {
    const auto g = numgrid::build_grid(Scheme::collocation, 64);
    const auto f = diffop::fixed_L(2, diffop::BoundaryChoice::dirichlet_n2, g);
    const auto s = spectral::eigenpairs_from_inverse(f.L_inverse, 5);
    double worst = 0.0;
    for (std::size_t k = 0; k < 5; ++k) {
        const double exact = std::pow((k + 1.0) * std::numbers::pi, 2);
        worst = std::max(worst, std::abs(s.values[k] - exact) / exact);
    }
    c.at_most("max relative error of the first 5 eigenvalues", worst, 1e-8);
}

inline void exact_similarity(CheckList& c) {
    const auto spec = diffop::sign_case_n2(0.25, 0.75);
    const auto g = spec.make_grid(Scheme::collocation, 128);
    const auto b = restriction::build_bundle(spec, g);
    const auto lk = spectral::eigenpairs_from_inverse(b.L_K_inverse, 10);
    const CMat p = b.P().matrix();
    const CMat conj = p.fullPivLu().solve(b.L_K_inverse.matrix() * p);
    const auto ak = spectral::eigenpairs_from_inverse(OperatorMatrix(g, conj), 10);
    c.at_most("max relative deviation, P^-1 L_K^-1 P vs L_K^-1", spectral::compare_spectra(lk, ak, 10, 1e-11).max_deviation,
              1e-11);
}

inline double formula_deviation(const diffop::RestrictionSpec& spec, std::size_t n) {
    const auto g = spec.make_grid(Scheme::collocation, n);
    const auto b = restriction::build_bundle(spec, g);
    const auto lk = spectral::eigenpairs_from_inverse(b.L_K_inverse, 10);
    const auto formula = spectral::eigenpairs_via_inverse(diffop::assemble_AK_diff(spec, g, b.L), 10);
    return spectral::compare_spectra(lk, formula, 10, 1.0).max_deviation;
}

inline void cross_path(CheckList& c) {
    const auto spec = diffop::sign_case_n2(0.25, 0.75);
    const double d128 = formula_deviation(spec, 128), d256 = formula_deviation(spec, 256);
    c.at_most("max relative deviation at N=128", d128, 1e-6);
    c.at_least("shrink factor N=128 -> 256", d128 / d256, 4.0);
}

inline void inverse_identities(CheckList& c) {
    const auto spec = diffop::sign_case_n2(0.25, 0.75);
    const auto g = spec.make_grid(Scheme::collocation, 128);
    const auto b = restriction::build_bundle(spec, g);
    const auto r = restriction::identity_residuals(b);
    c.at_most("||(I+KL)(I-KL_K) - I|| relative", r.neumann_left, 1e-10);
    const OperatorMatrix formula = b.L_inverse * b.P();
    const OperatorMatrix direct = opcore::inverse(b.A_K);
    c.at_most("||inv(A_K) - L^-1(I+KL)|| relative",
              restriction::relative_distance(direct, formula, opcore::operator_norm(formula)), 1e-10);
}

inline void delta_consistency(CheckList& c) {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(0.02, 0.98);
    const auto g = numgrid::build_grid(Scheme::collocation, 32);
    double endpoint_vs_det = 0.0, cubic_vs_det = 0.0;
    for (int t = 0; t < 10; ++t) {
        double x1 = u(rng), x2 = u(rng);
        if (x1 > x2) std::swap(x1, x2);
        if (x2 - x1 < 1e-3) x2 = std::min(0.99, x1 + 0.1);
        const auto spec = diffop::sign_case_n2(x1, x2);
        const cplx det = diffop::build_U(spec).det;
        const cplx endpoint = diffop::n2_closed_forms(spec, g).delta_endpoint;
        endpoint_vs_det = std::max(endpoint_vs_det, std::abs(endpoint - det));
        cubic_vs_det = std::max(cubic_vs_det, std::abs(diffop::cubic_sign_case_delta(x1, x2) - det));
    }
    c.at_most("max |endpoint Delta - det U| over 10 pairs", endpoint_vs_det, 1e-10);
    c.at_most("max |cubic Delta - det U| over 10 pairs", cubic_vs_det, 1e-10);
    // x1 = 0, x2 = 1: the densities are 2 and 2x on all of (0, 1)
    const auto whole = diffop::polynomial_spec(2, diffop::BoundaryChoice::dirichlet_n2, -1.0, {{2.0}, {0.0, 2.0}});
    const double target = 23.0 / 12.0;
    c.at_most("|det U(0,1) - 23/12|", std::abs(diffop::build_U(whole).det - target), 1e-10);
    c.at_most("|cubic Delta(0,1) - 23/12|", std::abs(diffop::cubic_sign_case_delta(0.0, 1.0) - target), 1e-10);
}

inline void boundedness_probe(CheckList& c) {
    const std::vector<std::size_t> sizes{64, 128, 256};
    const auto good = restriction::kl_probe(diffop::sign_case_n2(0.25, 0.75), Scheme::collocation, sizes);
    const auto [lo, hi] = std::minmax_element(good.norms.begin(), good.norms.end());
    c.below("admissible: (max - min)/min of ||KL||", (*hi - *lo) / *lo, 0.20);
    const auto bad = restriction::kl_probe(diffop::sign_case_n2(0.25, 0.75, {{1.0, 0.0}, {0.0, 0.0}}), Scheme::collocation, sizes);
    c.above("inadmissible: ||KL|| growth N=64 -> 256", bad.norms.back() / bad.norms.front(), 2.0);
}

inline void eigenfunction_mapping(CheckList& c) {
    const auto spec = diffop::sign_case_n2(0.25, 0.75);
    const auto g = spec.make_grid(Scheme::collocation, 256);
    const auto b = restriction::build_bundle(spec, g);
    const auto s = spectral::eigenpairs_from_inverse(b.A_K_inverse, 8);
    const auto m = spectral::map_eigenfunctions(s, b.KL, b.L_K_inverse);
    const auto u = diffop::build_U(spec);
    double fixed_point = 0.0, boundary = 0.0;
    for (std::size_t k = 0; k < 8; ++k) {
        fixed_point = std::max(fixed_point, m.residuals[k]);
        boundary = std::max(boundary, max_abs(diffop::lk_boundary_residual(m.vectors[k], u, spec)));
    }
    c.at_most("max fixed-point residual, first 8 pairs", fixed_point, 1e-5);
    c.at_most("max boundary residual of L_K, first 8 pairs", boundary, 1e-5);
}

inline void adjoint(CheckList& c) {
    const auto spec = diffop::sign_case_n2(0.25, 0.75);
    const auto g = spec.make_grid(Scheme::collocation, 256);
    const auto b = restriction::build_bundle(spec, g);
    const auto as = restriction::build_adjoint_similar(b);
    std::mt19937 rng(17);
    double pairing = 0.0;
    for (int t = 0; t < 20; ++t) {
        const auto v = b.L_inverse(random_function(g, rng));
        const auto w = b.L_inverse(random_function(g, rng));
        const double r = std::abs(numgrid::inner_product(b.A_K(v), w) - numgrid::inner_product(v, as(w)));
        pairing = std::max(pairing, r / (numgrid::norm(v) * numgrid::norm(w)));
    }
    c.at_most("max pairing residual / (||v|| ||w||), 20 pairs", pairing, 1e-8);

    const auto ak = spectral::eigenpairs_from_inverse(b.A_K_inverse, 10);
    const auto adj = spectral::eigenpairs_from_inverse(restriction::adjoint_inverse_classical(b, spec), 10);
    std::vector<cplx> conj;
    for (cplx z : ak.values) conj.push_back(std::conj(z));
    c.at_most("max relative deviation, eig(A_K*) vs conj eig(A_K)",
              spectral::compare_spectra(conj, adj.values, 10, 1e-8).max_deviation, 1e-8);

    const auto forms = diffop::n2_closed_forms(spec, g);
    double jump = 0.0;
    for (const auto& v : adj.vectors) jump = std::max(jump, max_abs(diffop::adjoint_domain_residual(v, forms)));
    c.at_most("max jump-condition residual, 10 eigenvectors of A_K*", jump, 1e-5);
}

inline void riesz(CheckList& c) {
    const auto spec = diffop::sign_case_n2(0.25, 0.75);
    std::vector<spectral::RieszProxy> r;
    for (std::size_t n : {128, 256}) {
        const auto g = spec.make_grid(Scheme::collocation, n);
        const auto b = restriction::build_bundle(spec, g);
        r.push_back(spectral::riesz_gram_proxy(spectral::eigenpairs_from_inverse(b.L_K_inverse, 20), 20));
    }
    c.below("relative change of the Gram condition number N=128 -> 256",
            std::abs(r[1].condition - r[0].condition) / r[0].condition, 0.10);
    c.at_most("max biorthogonality error", std::max(r[0].biorthogonality_error, r[1].biorthogonality_error), 1e-8);
    c.add("no rank-deficient bracket", 0.0, 0.0, !r[0].rank_deficient && !r[1].rank_deficient, "==");
}

inline std::string degenerate_config_json() {
    return R"({
  "schema_version": 1,
  "order": 2,
  "fixed": "dirichlet_n2",
  "sigma": {"mode": "polynomial", "coefficients": [[4, -6], [-2, 6]]},
  "grid": {"scheme": "collocation", "sizes": [64]},
  "m": 4
}
)";
}

inline void degeneracy(CheckList& c, const std::optional<std::string>& cli_path) {
    const auto spec = diffop::degenerate_n2();
    c.at_most("|det U|", std::abs(diffop::build_U(spec).det), 1e-6);
    const auto g = spec.make_grid(Scheme::collocation, 256);
    const auto d = restriction::density_check(diffop::fixed_L(spec, g).L, restriction::assemble_K(spec, g));
    c.at_most("min singular value of (I+KL)*, N=256", d.smin, 1e-6);
    if (!cli_path) {
        c.add("CLI exit code on the degenerate scenario", -1.0, 3.0, false, "==");
        return;
    }
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / ("restrictlab-acceptance-" + std::to_string(::getpid()));
    fs::create_directories(dir);
    write_atomic(dir / "degenerate.json", degenerate_config_json());
    const int code = run_process(shell_quote(*cli_path) + " similarity --config " + shell_quote((dir / "degenerate.json").string()) +
                                 " --out " + shell_quote((dir / "out").string()) + " >/dev/null 2>&1");
    std::error_code ec;
    fs::remove_all(dir, ec);
    c.add("CLI exit code on the degenerate scenario", code, 3.0, code == 3, "==");
}

} // namespace acceptance_detail

/// Runs criteria 1-10. Criterion 10 launches the CLI at cli_path when given.
inline AcceptanceReport run_acceptance(const std::optional<std::string>& cli_path = std::nullopt) {
    namespace a = acceptance_detail;
    const std::vector<std::pair<std::string, std::function<void(CheckList&)>>> items{
        {"baseline Dirichlet spectrum", a::baseline},
        {"exact similarity P^-1 L_K P", a::exact_similarity},
        {"formula A_K vs L_K spectrum", a::cross_path},
        {"inverse identities", a::inverse_identities},
        {"Delta consistency", a::delta_consistency},
        {"boundedness probe of KL", a::boundedness_probe},
        {"eigenfunction mapping u = (I+KL)v", a::eigenfunction_mapping},
        {"adjoint pairing, spectrum and jumps", a::adjoint},
        {"Riesz-with-brackets proxy", a::riesz},
        {"degeneracy agreement", [&](CheckList& c) { a::degeneracy(c, cli_path); }},
    };
    AcceptanceReport report;
    for (std::size_t i = 0; i < items.size(); ++i) {
        CriterionResult r;
        r.id = static_cast<int>(i + 1);
        r.title = items[i].first;
        try {
            items[i].second(r.checks);
            r.pass = r.checks.all_pass() && !r.checks.empty();
        } catch (const std::exception& e) {
            r.error = e.what();
            r.pass = false;
        }
        report.criteria.push_back(std::move(r));
    }
    return report;
}

inline std::string short_fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

/// One line per criterion: "criterion N: PASS|FAIL title (check=value ...)".
inline std::string summary_line(const CriterionResult& r) {
    std::string line = "criterion " + std::to_string(r.id) + ": " + (r.pass ? "PASS" : "FAIL") + " " + r.title;
    for (const auto& c : r.checks.json()) {
        line += " | " + c["name"].get<std::string>() + " = " + fmt(c["value"].get<double>()) + " " +
                c["relation"].get<std::string>() + " " + short_fmt(c["threshold"].get<double>()) +
                (c["pass"].get<bool>() ? "" : " [fail]");
    }
    if (!r.error.empty()) line += " | error: " + r.error;
    return line;
}

inline nlohmann::ordered_json to_json(const AcceptanceReport& r) {
    nlohmann::ordered_json out = nlohmann::ordered_json::array();
    for (const auto& c : r.criteria) {
        nlohmann::ordered_json item{{"id", c.id}, {"title", c.title}, {"pass", c.pass}, {"checks", c.checks.json()}};
        if (!c.error.empty()) item["error"] = c.error;
        out.push_back(std::move(item));
    }
    return out;
}

} // namespace restrictlab::cli
