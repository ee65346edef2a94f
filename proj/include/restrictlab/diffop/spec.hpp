#pragma once

#include "restrictlab/errors.hpp"
#include "restrictlab/numgrid/calculus.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace restrictlab::diffop {

using numgrid::BoundaryCondition;
using numgrid::BoundaryConditions;
using numgrid::cplx;
using numgrid::CMat;
using numgrid::CVec;
using numgrid::GridFunction;
using numgrid::GridPtr;
using numgrid::Piecewise;
using numgrid::Scheme;
using numgrid::Side;

/// Fixed boundary correct extension L = s d^n/dx^n.
enum class BoundaryChoice {
    antiperiodic_sum, ///< y^(k)(0) + y^(k)(1) = 0, k = 0..n-1
    dirichlet_n2,     ///< y(0) = y(1) = 0, n = 2
};

inline std::string to_string(BoundaryChoice b) {
    return b == BoundaryChoice::dirichlet_n2 ? "dirichlet-n2" : "antiperiodic-sum";
}

inline BoundaryConditions boundary_conditions(BoundaryChoice b, int n) {
    if (b == BoundaryChoice::dirichlet_n2) {
        if (n != 2) throw ConfigError("dirichlet-n2 requires order 2, got " + std::to_string(n));
        return numgrid::dirichlet_conditions();
    }
    return numgrid::antiperiodic_sum_conditions(n);
}

/// Conventional sign s of L = s d^n: -1 for Dirichlet (-y''), +1 for antiperiodic-sum.
inline double default_sign(BoundaryChoice b) { return b == BoundaryChoice::dirichlet_n2 ? -1.0 : 1.0; }

/**
 * A correct restriction of the n-th order differentiation operator.
 *
 * The kernel functions sigma_i are given through sigma_i^(n) and rebuilt with
 * the boundary conditions of the fixed operator (optionally with nonzero
 * values, which places sigma outside D(L*)).
 */
struct RestrictionSpec {
    int order = 2;
    BoundaryChoice fixed = BoundaryChoice::dirichlet_n2;
    double sign = -1.0;
    std::vector<Piecewise> sigma_n;
    std::vector<std::vector<cplx>> sigma_bc_values;
    std::vector<double> points;
    std::vector<double> grid_breaks;
    std::vector<Piecewise> sigmas;
    std::string label;

    BoundaryConditions fixed_conditions() const { return boundary_conditions(fixed, order); }

    bool is_zero() const {
        for (const auto& s : sigma_n) {
            for (const auto& c : s.pieces()) {
                if (c.cwiseAbs().maxCoeff() != 0.0) return false;
            }
        }
        for (const auto& v : sigma_bc_values) {
            for (cplx x : v) {
                if (x != 0.0) return false;
            }
        }
        return true;
    }

    /// True when every sigma_i satisfies the homogeneous boundary conditions of D(L*).
    bool admissible() const {
        for (const auto& v : sigma_bc_values) {
            for (cplx x : v) {
                if (std::abs(x) > 0.0) return false;
            }
        }
        return true;
    }

    GridPtr make_grid(Scheme scheme, std::size_t n) const {
        return numgrid::build_grid(scheme, n, scheme == Scheme::collocation ? grid_breaks : std::vector<double>{});
    }
};

inline void validate_points(const std::vector<double>& pts) {
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (!(pts[i] > 0.0 && pts[i] < 1.0)) throw ConfigError("sign-case points must lie strictly inside (0,1)");
        if (i > 0 && !(pts[i] > pts[i - 1])) throw ConfigError("sign-case points must be strictly increasing");
    }
}

/// Rebuild sigma_i from sigma_i^(n) and check the boundary conditions.
inline void reconstruct(RestrictionSpec& spec) {
    if (spec.order < 1) throw ConfigError("order must be >= 1");
    if (spec.sigma_n.size() != static_cast<std::size_t>(spec.order)) {
        throw ConfigError("need exactly " + std::to_string(spec.order) + " sigma functions, got " +
                          std::to_string(spec.sigma_n.size()));
    }
    if (spec.sign != 1.0 && spec.sign != -1.0) throw ConfigError("operator sign must be +1 or -1");
    validate_points(spec.points);
    if (spec.sigma_bc_values.empty()) {
        spec.sigma_bc_values.assign(spec.sigma_n.size(), std::vector<cplx>(static_cast<std::size_t>(spec.order), 0.0));
    }
    if (spec.sigma_bc_values.size() != spec.sigma_n.size()) throw ConfigError("one boundary-value list per sigma");
    spec.sigmas.clear();
    for (std::size_t i = 0; i < spec.sigma_n.size(); ++i) {
        auto bc = spec.fixed_conditions();
        if (spec.sigma_bc_values[i].size() != bc.size()) throw ConfigError("sigma boundary values: wrong count");
        for (std::size_t r = 0; r < bc.size(); ++r) bc[r].value = spec.sigma_bc_values[i][r];
        Piecewise s = numgrid::antiderivative_with_bc(spec.sigma_n[i], spec.order, bc);
        for (const auto& c : bc) {
            if (std::abs(c.apply(s) - c.value) > 1e-10) throw NumericalError("sigma reconstruction violates its boundary conditions", 0.0);
        }
        spec.sigmas.push_back(std::move(s));
    }
}

inline RestrictionSpec make_spec(int n, BoundaryChoice fixed, double sign, std::vector<Piecewise> sigma_n,
                                 std::vector<double> points = {}, std::vector<double> grid_breaks = {},
                                 std::vector<std::vector<cplx>> bc_values = {}, std::string label = "") {
    RestrictionSpec s;
    s.order = n;
    s.fixed = fixed;
    s.sign = sign;
    s.sigma_n = std::move(sigma_n);
    s.points = std::move(points);
    s.grid_breaks = std::move(grid_breaks);
    s.sigma_bc_values = std::move(bc_values);
    s.label = std::move(label);
    reconstruct(s);
    return s;
}

/// sigma = 0: L_K = L.
inline RestrictionSpec zero_spec(int n, BoundaryChoice fixed, double sign) {
    return make_spec(n, fixed, sign, std::vector<Piecewise>(static_cast<std::size_t>(n), Piecewise::constant(0.0)), {},
                     {}, {}, "zero");
}

inline RestrictionSpec zero_spec(int n, BoundaryChoice fixed) { return zero_spec(n, fixed, default_sign(fixed)); }

/// sigma_i^(n)(x) = sign(x - x_i), midpoint convention at the jump.
inline Piecewise sign_step(double xi) { return Piecewise::from_monomials({0.0, xi, 1.0}, {{-1.0}, {1.0}}); }

inline RestrictionSpec sign_case_spec(int n, std::vector<double> points, BoundaryChoice fixed, double sign) {
    if (points.size() != static_cast<std::size_t>(n)) throw ConfigError("sign case needs exactly n points");
    validate_points(points);
    std::vector<Piecewise> s;
    for (double x : points) s.push_back(sign_step(x));
    return make_spec(n, fixed, sign, std::move(s), points, points, {}, "sign");
}

/// The n = 2 Dirichlet example: sigma_1'' = 2 on (x1, x2), sigma_2'' = 2x on (x1, x2), zero elsewhere.
inline std::vector<Piecewise> paired_sign_densities(double x1, double x2) {
    const std::vector<double> b{0.0, x1, x2, 1.0};
    return {Piecewise::from_monomials(b, {{0.0}, {2.0}, {0.0}}),
            Piecewise::from_monomials(b, {{0.0}, {0.0, 2.0}, {0.0}})};
}

inline RestrictionSpec sign_case_n2(double x1, double x2, std::vector<std::vector<cplx>> bc_values = {}) {
    validate_points({x1, x2});
    return make_spec(2, BoundaryChoice::dirichlet_n2, -1.0, paired_sign_densities(x1, x2), {x1, x2}, {x1, x2},
                     std::move(bc_values), "paired-sign");
}

/// sigma_i^(n) given as global polynomials (monomial coefficients).
inline RestrictionSpec polynomial_spec(int n, BoundaryChoice fixed, double sign,
                                       const std::vector<std::vector<cplx>>& coeffs,
                                       std::vector<std::vector<cplx>> bc_values = {}) {
    std::vector<Piecewise> s;
    for (const auto& c : coeffs) s.push_back(Piecewise::polynomial(c));
    return make_spec(n, fixed, sign, std::move(s), {}, {}, std::move(bc_values), "polynomial");
}

/// sigma_i^(n) from samples, linearly interpolated between the given abscissae.
inline RestrictionSpec tabulated_spec(int n, BoundaryChoice fixed, double sign, const std::vector<double>& x,
                                      const std::vector<std::vector<cplx>>& values,
                                      std::vector<std::vector<cplx>> bc_values = {}) {
    if (x.size() < 2 || x.front() != 0.0 || x.back() != 1.0) {
        throw ConfigError("tabulated sigma: abscissae must start at 0 and end at 1");
    }
    std::vector<Piecewise> s;
    for (const auto& v : values) {
        if (v.size() != x.size()) throw ConfigError("tabulated sigma: value count must match abscissae");
        std::vector<std::vector<cplx>> mono;
        for (std::size_t j = 0; j + 1 < x.size(); ++j) {
            const cplx slope = (v[j + 1] - v[j]) / (x[j + 1] - x[j]);
            mono.push_back({v[j] - slope * x[j], slope});
        }
        s.push_back(Piecewise::from_monomials(x, mono));
    }
    return make_spec(n, fixed, sign, std::move(s), {}, {}, std::move(bc_values), "tabulated");
}

/// Dirichlet n = 2 kernel with det U = 0: sigma_1 = -x(1-x)^2, sigma_2 = x^2(x-1).
inline RestrictionSpec degenerate_n2() {
    return polynomial_spec(2, BoundaryChoice::dirichlet_n2, -1.0, {{4.0, -6.0}, {-2.0, 6.0}});
}

} // namespace restrictlab::diffop
