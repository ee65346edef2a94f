#pragma once

#include "restrictlab/diffop/spec.hpp"
#include "restrictlab/opcore/operator.hpp"

#include <cmath>
#include <vector>

namespace restrictlab::diffop {

using opcore::OperatorMatrix;
using opcore::Role;

/// Polynomials of degree < n dual to the fixed boundary functionals: B_k(w_i) = delta_ik.
inline std::vector<Piecewise> kernel_polynomials(int n, BoundaryChoice fixed) {
    const auto bcs = boundary_conditions(fixed, n);
    const CMat m = numgrid::boundary_system(n, bcs);
    numgrid::require_determined(m);
    const CMat c = m.fullPivLu().inverse();
    std::vector<Piecewise> out;
    for (int i = 0; i < n; ++i) {
        std::vector<cplx> mono(static_cast<std::size_t>(n));
        for (int k = 0; k < n; ++k) mono[static_cast<std::size_t>(k)] = c(k, i) / std::tgamma(k + 1.0);
        out.push_back(Piecewise::polynomial(mono));
    }
    return out;
}

/// Kernel directions w_1..w_n sampled on the grid. Dirichlet n = 2 gives {1 - x, x}.
inline std::vector<GridFunction> kernel_basis(int n, BoundaryChoice fixed, const GridPtr& grid) {
    if (n < 1) throw ConfigError("order must be >= 1");
    std::vector<GridFunction> out;
    for (const auto& w : kernel_polynomials(n, fixed)) out.push_back(GridFunction::sample(grid, w));
    return out;
}

struct FixedOperator {
    OperatorMatrix L;
    OperatorMatrix L_inverse;
};

namespace detail {

/// Column m: the exact solution of s y^(n) = (interpolant of e_m) with the boundary conditions.
inline CMat collocation_green(const numgrid::Grid& grid, const GridPtr& gp, int n, double sign,
                              const BoundaryConditions& bcs) {
    const auto size = static_cast<Eigen::Index>(grid.size());
    CMat g(size, size);
    std::vector<double> breaks{0.0};
    for (const auto& p : grid.panels()) breaks.push_back(p.b);
    for (const auto& p : grid.panels()) {
        const Eigen::MatrixXd cmap = numgrid::panel_coefficient_map(grid, p);
        for (std::size_t k = 0; k < p.count; ++k) {
            std::vector<CVec> pieces(grid.panels().size(), CVec::Zero(1));
            const std::size_t idx = static_cast<std::size_t>(&p - grid.panels().data());
            pieces[idx] = cmap.col(static_cast<Eigen::Index>(k)).cast<cplx>() / sign;
            const Piecewise y = numgrid::antiderivative_with_bc(Piecewise(breaks, std::move(pieces)), n, bcs);
            g.col(static_cast<Eigen::Index>(p.first + k)) = GridFunction::sample(gp, y).values();
        }
    }
    return g;
}

/// Finite-difference s d^n with boundary rows replaced by the conditions.
inline CMat bordered_difference(const numgrid::Grid& grid, int n, double sign, const BoundaryConditions& bcs) {
    const std::size_t size = grid.size();
    const double h = grid.spacing();
    CMat l = (sign * numgrid::differentiation_matrix(grid, n)).cast<cplx>();
    const std::size_t head = static_cast<std::size_t>((n + 1) / 2);
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < head; ++r) rows.push_back(r);
    for (std::size_t r = size - (static_cast<std::size_t>(n) - head); r < size; ++r) rows.push_back(r);
    const auto& x = grid.nodes();
    for (std::size_t r = 0; r < bcs.size(); ++r) {
        const auto& bc = bcs[r];
        const auto row = static_cast<Eigen::Index>(rows[r]);
        l.row(row).setZero();
        const std::size_t width = static_cast<std::size_t>(bc.derivative) + 2;
        const double scale = std::pow(h, -n);
        const std::vector<double> left(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(width));
        const std::vector<double> right(x.end() - static_cast<std::ptrdiff_t>(width), x.end());
        const auto wl = numgrid::fornberg_weights(0.0, left, bc.derivative);
        const auto wr = numgrid::fornberg_weights(1.0, right, bc.derivative);
        for (std::size_t k = 0; k < width; ++k) {
            l(row, static_cast<Eigen::Index>(k)) += bc.at_zero * wl[bc.derivative][k] * scale;
            l(row, static_cast<Eigen::Index>(size - width + k)) += bc.at_one * wr[bc.derivative][k] * scale;
        }
    }
    return l;
}

} // namespace detail

/**
 * The fixed operator L = s d^n with the chosen boundary conditions, and L^{-1}.
 *
 * collocation: L^{-1} is the exact Green operator applied to the panel
 * interpolant, L its matrix inverse. uniform: L is the bordered
 * finite-difference matrix, L^{-1} its inverse.
 */
inline FixedOperator fixed_L(int n, BoundaryChoice choice, const GridPtr& grid, double sign) {
    if (n < 1) throw ConfigError("order must be >= 1");
    if (sign != 1.0 && sign != -1.0) throw ConfigError("operator sign must be +1 or -1");
    const auto bcs = boundary_conditions(choice, n);
    if (grid->scheme() == Scheme::collocation) {
        OperatorMatrix g(grid, detail::collocation_green(*grid, grid, n, sign, bcs), Role::L_inverse);
        OperatorMatrix l = opcore::inverse(g, Role::L);
        return {std::move(l), std::move(g)};
    }
    OperatorMatrix l(grid, detail::bordered_difference(*grid, n, sign, bcs), Role::L);
    OperatorMatrix g = opcore::inverse(l, Role::L_inverse);
    return {std::move(l), std::move(g)};
}

inline FixedOperator fixed_L(int n, BoundaryChoice choice, const GridPtr& grid) {
    return fixed_L(n, choice, grid, default_sign(choice));
}

inline FixedOperator fixed_L(const RestrictionSpec& spec, const GridPtr& grid) {
    return fixed_L(spec.order, spec.fixed, grid, spec.sign);
}

/// Independent discretization of the formal adjoint s(-1)^n d^n; both boundary families are self-adjoint.
inline FixedOperator fixed_L_adjoint(const RestrictionSpec& spec, const GridPtr& grid) {
    const double s = (spec.order % 2 == 0) ? spec.sign : -spec.sign;
    FixedOperator f = fixed_L(spec.order, spec.fixed, grid, s);
    return {f.L.with_role(Role::L, true), f.L_inverse.with_role(Role::L_inverse, true)};
}

} // namespace restrictlab::diffop
