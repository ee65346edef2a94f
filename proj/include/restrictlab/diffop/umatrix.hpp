#pragma once

#include "restrictlab/diffop/fixed.hpp"

#include <functional>
#include <vector>

namespace restrictlab::diffop {

inline constexpr double kDefaultDegenerateThreshold = 1e-10;

struct UMatrixData {
    CMat U;
    cplx det = 1.0;
    CMat beta;
    bool degenerate = false;
};

/// s(-1)^n: the factor relating K L to the sigma^(n) pairings.
inline double adjoint_factor(const RestrictionSpec& spec) { return (spec.order % 2 == 0) ? spec.sign : -spec.sign; }

inline UMatrixData finish_U(CMat u, double threshold) {
    UMatrixData d;
    d.det = u.determinant();
    d.degenerate = !(std::abs(d.det) > threshold);
    d.beta = d.degenerate ? CMat::Constant(u.rows(), u.cols(), cplx(std::nan(""), 0.0)) : CMat(u.inverse());
    d.U = std::move(u);
    return d;
}

/**
 * U from endpoint data of the reconstructed sigma_j:
 *   U_ji = delta_ji + s(-1)^n sum_k (-1)^k [w_i^(k) conj(sigma_j^(n-1-k))]_0^1,
 * which is <w_i, sigma_j^(n)> integrated by parts. For antiperiodic-sum with
 * s = +1 this is delta + (-1)^(n-i) conj(sigma_j^(n-i)(0)); for Dirichlet n = 2
 * its determinant is Delta.
 */
inline UMatrixData build_U(const RestrictionSpec& spec, double threshold = kDefaultDegenerateThreshold) {
    const int n = spec.order;
    const auto ws = kernel_polynomials(n, spec.fixed);
    const double f = adjoint_factor(spec);
    CMat u = CMat::Identity(n, n);
    for (int j = 0; j < n; ++j) {
        const Piecewise& s = spec.sigmas[static_cast<std::size_t>(j)];
        for (int i = 0; i < n; ++i) {
            const Piecewise& w = ws[static_cast<std::size_t>(i)];
            cplx acc = 0.0;
            for (int k = 0; k < n; ++k) {
                const int m = n - 1 - k;
                const cplx at1 = w(1.0, k, Side::left) * std::conj(s(1.0, m, Side::left));
                const cplx at0 = w(0.0, k, Side::right) * std::conj(s(0.0, m, Side::right));
                acc += ((k % 2 == 0) ? 1.0 : -1.0) * (at1 - at0);
            }
            u(j, i) += f * acc;
        }
    }
    return finish_U(std::move(u), threshold);
}

/// U = I + s(-1)^n [<w_i, sigma_j^(n)>]_ji by quadrature on the grid.
inline UMatrixData build_U_quadrature(const RestrictionSpec& spec, const GridPtr& grid,
                                      double threshold = kDefaultDegenerateThreshold) {
    const int n = spec.order;
    const auto ws = kernel_basis(n, spec.fixed, grid);
    const double f = adjoint_factor(spec);
    CMat u = CMat::Identity(n, n);
    for (int j = 0; j < n; ++j) {
        const auto sn = GridFunction::sample(grid, spec.sigma_n[static_cast<std::size_t>(j)]);
        for (int i = 0; i < n; ++i) u(j, i) += f * numgrid::inner_product(ws[static_cast<std::size_t>(i)], sn);
    }
    return finish_U(std::move(u), threshold);
}

/// Samples of sigma_j^(n) and sigma_j on the grid.
inline std::vector<GridFunction> sigma_n_samples(const RestrictionSpec& spec, const GridPtr& grid) {
    std::vector<GridFunction> out;
    for (const auto& s : spec.sigma_n) out.push_back(GridFunction::sample(grid, s));
    return out;
}

inline std::vector<GridFunction> sigma_samples(const RestrictionSpec& spec, const GridPtr& grid) {
    std::vector<GridFunction> out;
    for (const auto& s : spec.sigmas) out.push_back(GridFunction::sample(grid, s));
    return out;
}

/**
 * Residuals of the nonlocal boundary condition of L_K:
 *   r_i = B_i(u) - s(-1)^n sum_j beta_ij <u, sigma_j^(n)>,
 * with B_i the fixed boundary functionals evaluated on the interpolant of u.
 */
inline CVec lk_boundary_residual(const GridFunction& u, const UMatrixData& data, const RestrictionSpec& spec) {
    const int n = spec.order;
    const auto p = numgrid::interpolant(u);
    const auto bcs = spec.fixed_conditions();
    const auto sn = sigma_n_samples(spec, u.grid());
    CVec pair(n);
    for (int j = 0; j < n; ++j) pair[j] = numgrid::inner_product(u, sn[static_cast<std::size_t>(j)]);
    const CVec rhs = adjoint_factor(spec) * (data.beta * pair);
    CVec r(n);
    for (int i = 0; i < n; ++i) r[i] = bcs[static_cast<std::size_t>(i)].apply(p) - rhs[i];
    return r;
}

/// F_j(v) = int v^(n) conj(sigma_j^(n)) by quadrature of the grid derivative.
inline CVec functionals_F(const GridFunction& v, const RestrictionSpec& spec) {
    const int n = spec.order;
    const auto dv = numgrid::differentiate(v, n);
    const auto sn = sigma_n_samples(spec, v.grid());
    CVec out(n);
    for (int j = 0; j < n; ++j) out[j] = numgrid::inner_product(dv, sn[static_cast<std::size_t>(j)]);
    return out;
}

/// v(x, k) = k-th derivative of the test function at x.
using Evaluator = std::function<cplx(double, int)>;

/**
 * Pointwise closed forms of F_j for the sign cases:
 *   sign:        F_i = -2 v^(n-1)(x_i)   (v in D(L));
 *   paired-sign: F_1 = 2v'(x2) - 2v'(x1), F_2 = 2x2 v'(x2) - 2x1 v'(x1) - 2v(x2) + 2v(x1).
 */
inline CVec functionals_F_closed_form(const Evaluator& v, const RestrictionSpec& spec) {
    const int n = spec.order;
    CVec out(n);
    if (spec.label == "sign") {
        for (int i = 0; i < n; ++i) out[i] = -2.0 * v(spec.points[static_cast<std::size_t>(i)], n - 1);
        return out;
    }
    if (spec.label == "paired-sign") {
        const double x1 = spec.points[0], x2 = spec.points[1];
        out[0] = 2.0 * v(x2, 1) - 2.0 * v(x1, 1);
        out[1] = 2.0 * x2 * v(x2, 1) - 2.0 * x1 * v(x1, 1) - 2.0 * v(x2, 0) + 2.0 * v(x1, 0);
        return out;
    }
    throw ConfigError("no closed form for functionals of sigma kind '" + spec.label + "'");
}

inline CVec functionals_F_closed_form(const GridFunction& v, const RestrictionSpec& spec) {
    const auto p = numgrid::interpolant(v);
    return functionals_F_closed_form([&](double x, int k) { return p(x, k); }, spec);
}

/**
 * A_K v = s v^(n) - (-1)^n sum_i w_i sum_j beta_ij F_j(v), assembled from U
 * (endpoint route) and the grid derivative, independently of the
 * conjugation (I + KL)^{-1} L.
 */
inline OperatorMatrix assemble_AK_diff(const RestrictionSpec& spec, const GridPtr& grid, const OperatorMatrix& L,
                                       double threshold = kDefaultDegenerateThreshold) {
    const int n = spec.order;
    const UMatrixData u = build_U(spec, threshold);
    if (u.degenerate) throw DegenerateError("L_K not densely defined (det U ≈ 0)", std::abs(u.det));
    const auto ws = kernel_basis(n, spec.fixed, grid);
    const auto sn = sigma_n_samples(spec, grid);
    const auto size = static_cast<Eigen::Index>(grid->size());
    const Eigen::MatrixXd dn = numgrid::differentiation_matrix(*grid, n);
    CMat w(size, n), f(n, size);
    for (int i = 0; i < n; ++i) w.col(i) = ws[static_cast<std::size_t>(i)].values();
    for (int j = 0; j < n; ++j) {
        CVec row(size);
        for (Eigen::Index m = 0; m < size; ++m) {
            row[m] = grid->weights()[static_cast<std::size_t>(m)] * std::conj(sn[static_cast<std::size_t>(j)].values()[m]);
        }
        f.row(j) = row.transpose() * dn;
    }
    const double parity = (n % 2 == 0) ? 1.0 : -1.0;
    CMat a = L.matrix() - parity * (w * u.beta * f);
    return {grid, std::move(a), Role::A_K};
}

} // namespace restrictlab::diffop
