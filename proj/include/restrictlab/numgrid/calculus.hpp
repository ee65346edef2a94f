#pragma once

#include "restrictlab/errors.hpp"
#include "restrictlab/numgrid/chebyshev.hpp"
#include "restrictlab/numgrid/grid.hpp"
#include "restrictlab/numgrid/piecewise.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace restrictlab::numgrid {

/// Map from panel node values to Chebyshev coefficients of the panel interpolant.
inline Eigen::MatrixXd panel_coefficient_map(const Grid& grid, const Panel& panel) {
    std::vector<double> t(panel.count);
    for (std::size_t k = 0; k < panel.count; ++k) {
        t[k] = (2.0 * grid.nodes()[panel.first + k] - panel.a - panel.b) / (panel.b - panel.a);
    }
    return chebyshev_vandermonde(t, panel.count).inverse();
}

/// Natural interpolant of a grid function: per-panel polynomial on collocation
/// grids, piecewise linear on uniform grids.
inline Piecewise interpolant(const GridFunction& f) {
    const Grid& g = *f.grid();
    const auto& x = g.nodes();
    if (g.scheme() == Scheme::uniform) {
        std::vector<CVec> pieces;
        for (std::size_t j = 0; j + 1 < x.size(); ++j) {
            CVec c(2);
            c[0] = 0.5 * (f[j] + f[j + 1]);
            c[1] = 0.5 * (f[j + 1] - f[j]);
            pieces.push_back(c);
        }
        return Piecewise(x, std::move(pieces));
    }
    std::vector<double> breaks{0.0};
    std::vector<CVec> pieces;
    for (const auto& p : g.panels()) {
        const Eigen::MatrixXd c = panel_coefficient_map(g, p);
        const CVec vals = f.values().segment(static_cast<Eigen::Index>(p.first), static_cast<Eigen::Index>(p.count));
        CVec coeff(static_cast<Eigen::Index>(p.count));
        coeff.real() = c * vals.real();
        coeff.imag() = c * vals.imag();
        pieces.push_back(coeff);
        breaks.push_back(p.b);
    }
    return Piecewise(std::move(breaks), std::move(pieces));
}

/// Value (or derivative) of the natural interpolant at an arbitrary point.
inline cplx evaluate(const GridFunction& f, double x, int derivative = 0, Side side = Side::average) {
    return interpolant(f)(x, derivative, side);
}

/// Polynomial differentiation matrix of the given order on nodes t, built by the
/// barycentric recursion with diagonals from the negative-sum identity.
inline Eigen::MatrixXd barycentric_differentiation(const std::vector<double>& t, int order) {
    const auto n = static_cast<Eigen::Index>(t.size());
    Eigen::VectorXd w(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        double prod = 1.0;
        for (Eigen::Index k = 0; k < n; ++k) {
            if (k != j) prod *= t[static_cast<std::size_t>(j)] - t[static_cast<std::size_t>(k)];
        }
        w[j] = 1.0 / prod;
    }
    Eigen::MatrixXd d = Eigen::MatrixXd::Identity(n, n);
    for (int m = 1; m <= order; ++m) {
        Eigen::MatrixXd next = Eigen::MatrixXd::Zero(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            double diag = 0.0;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (i == j) continue;
                const double dx = t[static_cast<std::size_t>(i)] - t[static_cast<std::size_t>(j)];
                next(i, j) = m * ((w[j] / w[i]) * d(i, i) - d(i, j)) / dx;
                diag -= next(i, j);
            }
            next(i, i) = diag;
        }
        d = std::move(next);
    }
    return d;
}

/// Matrix of the order-th derivative acting on node values.
inline Eigen::MatrixXd differentiation_matrix(const Grid& grid, int order) {
    const std::size_t n = grid.size();
    if (order < 1) throw ConfigError("differentiation order must be >= 1");
    if (static_cast<std::size_t>(order) >= n) {
        throw ConfigError("differentiation order " + std::to_string(order) + " >= node count " + std::to_string(n));
    }
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    const auto& x = grid.nodes();
    if (grid.scheme() == Scheme::uniform) {
        const std::size_t half = static_cast<std::size_t>((order + 1) / 2);
        const std::size_t width = std::max<std::size_t>(2 * half + 1, static_cast<std::size_t>(order) + 2);
        if (width > n) throw ConfigError("grid too small for finite-difference order");
        for (std::size_t j = 0; j < n; ++j) {
            std::size_t lo, size;
            if (j >= half && j + half < n) {
                lo = j - half;
                size = 2 * half + 1;
            } else {
                size = width;
                lo = (j < half) ? 0 : n - width;
            }
            std::vector<double> xs(x.begin() + static_cast<std::ptrdiff_t>(lo),
                                   x.begin() + static_cast<std::ptrdiff_t>(lo + size));
            const auto w = fornberg_weights(x[j], xs, order);
            for (std::size_t k = 0; k < size; ++k) d(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(lo + k)) = w[order][k];
        }
        return d;
    }
    for (const auto& p : grid.panels()) {
        if (static_cast<std::size_t>(order) >= p.count) {
            throw ConfigError("differentiation order " + std::to_string(order) + " >= panel node count");
        }
        std::vector<double> t(p.count);
        for (std::size_t k = 0; k < p.count; ++k) t[k] = (2.0 * x[p.first + k] - p.a - p.b) / (p.b - p.a);
        const double scale = std::pow(2.0 / (p.b - p.a), order);
        d.block(static_cast<Eigen::Index>(p.first), static_cast<Eigen::Index>(p.first), static_cast<Eigen::Index>(p.count),
                static_cast<Eigen::Index>(p.count)) = barycentric_differentiation(t, order) * scale;
    }
    return d;
}

inline GridFunction differentiate(const GridFunction& f, int order) {
    const Eigen::MatrixXd d = differentiation_matrix(*f.grid(), order);
    CVec v(f.values().size());
    v.real() = d * f.values().real();
    v.imag() = d * f.values().imag();
    return {f.grid(), std::move(v)};
}

/// Linear boundary functional  at_zero * u^(k)(0) + at_one * u^(k)(1) = value.
struct BoundaryCondition {
    int derivative = 0;
    cplx at_zero = 0.0;
    cplx at_one = 0.0;
    cplx value = 0.0;

    cplx apply(const Piecewise& u) const {
        cplx acc = 0.0;
        if (at_zero != 0.0) acc += at_zero * u(0.0, derivative, Side::right);
        if (at_one != 0.0) acc += at_one * u(1.0, derivative, Side::left);
        return acc;
    }
};

using BoundaryConditions = std::vector<BoundaryCondition>;

/// u(0) = u(1) = 0.
inline BoundaryConditions dirichlet_conditions() { return {{0, 1.0, 0.0, 0.0}, {0, 0.0, 1.0, 0.0}}; }

/// u^(k)(0) + u^(k)(1) = 0 for k = 0..n-1.
inline BoundaryConditions antiperiodic_sum_conditions(int n) {
    BoundaryConditions bc;
    for (int k = 0; k < n; ++k) bc.push_back({k, 1.0, 1.0, 0.0});
    return bc;
}

/// x^k / k! on [0, 1].
inline Piecewise scaled_monomial(int k) {
    std::vector<cplx> c(static_cast<std::size_t>(k) + 1, 0.0);
    c.back() = 1.0 / std::tgamma(static_cast<double>(k) + 1.0);
    return Piecewise::polynomial(c);
}

/// The n x n matrix M(r, k) = bc_r(x^k / k!) fixing the integration constants.
inline CMat boundary_system(int n, std::span<const BoundaryCondition> bcs) {
    CMat m(n, n);
    for (int k = 0; k < n; ++k) {
        const Piecewise q = scaled_monomial(k);
        for (int r = 0; r < n; ++r) m(r, k) = bcs[static_cast<std::size_t>(r)].apply(q);
    }
    return m;
}

inline void require_determined(const CMat& m) {
    const Eigen::JacobiSVD<CMat> svd(m);
    const auto& s = svd.singularValues();
    if (s.size() == 0 || s[s.size() - 1] <= 1e-12 * std::max(1.0, s[0])) {
        throw ConfigError("boundary conditions do not determine antiderivative");
    }
}

/// sigma with sigma^(n) = g and the n boundary conditions satisfied.
inline Piecewise antiderivative_with_bc(const Piecewise& g, int n, std::span<const BoundaryCondition> bcs) {
    if (n < 1) throw ConfigError("antiderivative order must be >= 1");
    if (bcs.size() != static_cast<std::size_t>(n)) {
        throw ConfigError("antiderivative needs exactly " + std::to_string(n) + " boundary conditions, got " +
                          std::to_string(bcs.size()));
    }
    const CMat m = boundary_system(n, bcs);
    require_determined(m);
    Piecewise p = g;
    for (int i = 0; i < n; ++i) p = p.antiderivative();
    CVec rhs(n);
    for (int r = 0; r < n; ++r) rhs[r] = bcs[static_cast<std::size_t>(r)].value - bcs[static_cast<std::size_t>(r)].apply(p);
    const CVec c = m.fullPivLu().solve(rhs);
    std::vector<cplx> poly(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) poly[static_cast<std::size_t>(k)] = c[k] / std::tgamma(static_cast<double>(k) + 1.0);
    return p + Piecewise::polynomial(poly);
}

inline GridFunction antiderivative_with_bc(const GridFunction& g, int n, std::span<const BoundaryCondition> bcs) {
    return GridFunction::sample(g.grid(), antiderivative_with_bc(interpolant(g), n, bcs));
}

} // namespace restrictlab::numgrid
