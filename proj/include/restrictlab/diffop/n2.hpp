#pragma once

#include "restrictlab/diffop/umatrix.hpp"

#include <vector>

namespace restrictlab::diffop {

/// Closed forms of the Dirichlet n = 2 example.
struct N2ClosedForms {
    // conj(sigma_i'(0)), conj(sigma_i'(1))
    cplx s1p0, s1p1, s2p0, s2p1;
    cplx delta_endpoint;
    cplx delta_det_u;
    // A_K v = -v'' + a F_1(v) + b F_2(v)
    Piecewise a, b;
    // A_K* acts on v - c int (1-t) v - d int t v, with
    //   c = -(1/conj Delta)[(1 - s2'(1)) s1'' + s1'(1) s2''],
    //   d = -(1/conj Delta)[(1 + s1'(0)) s2'' - s2'(0) s1'']
    Piecewise c, d;
    GridFunction a_grid, b_grid, c_grid, d_grid;
    std::vector<double> points;
    // one-sided values at the sign-case points (x1 + 0 and x2 - 0)
    cplx c_x1_plus = 0.0, d_x1_plus = 0.0, c_x2_minus = 0.0, d_x2_minus = 0.0;
    cplx dc_x1_plus = 0.0, dd_x1_plus = 0.0;
};

inline N2ClosedForms n2_closed_forms(const RestrictionSpec& spec, const GridPtr& grid,
                                     double threshold = kDefaultDegenerateThreshold) {
    if (spec.order != 2 || spec.fixed != BoundaryChoice::dirichlet_n2 || spec.sign != -1.0) {
        throw ConfigError("n = 2 closed forms need the Dirichlet -y'' configuration");
    }
    const Piecewise& s1 = spec.sigmas[0];
    const Piecewise& s2 = spec.sigmas[1];
    N2ClosedForms f{.s1p0 = std::conj(s1(0.0, 1, Side::right)),
                    .s1p1 = std::conj(s1(1.0, 1, Side::left)),
                    .s2p0 = std::conj(s2(0.0, 1, Side::right)),
                    .s2p1 = std::conj(s2(1.0, 1, Side::left)),
                    .delta_endpoint = 0.0,
                    .delta_det_u = build_U(spec, 0.0).det,
                    .a = {}, .b = {}, .c = {}, .d = {},
                    .a_grid = GridFunction::zero(grid), .b_grid = GridFunction::zero(grid),
                    .c_grid = GridFunction::zero(grid), .d_grid = GridFunction::zero(grid),
                    .points = spec.points};
    const cplx delta = (1.0 + f.s1p0) * (1.0 - f.s2p1) + f.s2p0 * f.s1p1;
    f.delta_endpoint = delta;
    if (!(std::abs(delta) > threshold)) throw DegenerateError("degenerate configuration: Delta ~ 0", std::abs(delta));

    const cplx one = 1.0;
    f.a = (-one / delta) * (Piecewise::polynomial({1.0 - f.s2p1, -(1.0 - f.s2p1) - f.s2p0}));
    f.b = (-one / delta) * (Piecewise::polynomial({f.s1p1, -f.s1p1 + (1.0 + f.s1p0)}));
    const cplx dbar = std::conj(delta);
    const cplx c1 = std::conj(1.0 - f.s2p1), c2 = std::conj(f.s1p1);
    const cplx d1 = -std::conj(f.s2p0), d2 = std::conj(1.0 + f.s1p0);
    f.c = (-one / dbar) * (c1 * spec.sigma_n[0] + c2 * spec.sigma_n[1]);
    f.d = (-one / dbar) * (d2 * spec.sigma_n[1] + d1 * spec.sigma_n[0]);
    f.a_grid = GridFunction::sample(grid, f.a);
    f.b_grid = GridFunction::sample(grid, f.b);
    f.c_grid = GridFunction::sample(grid, f.c);
    f.d_grid = GridFunction::sample(grid, f.d);
    if (f.points.size() == 2) {
        const double x1 = f.points[0], x2 = f.points[1];
        f.c_x1_plus = f.c(x1, 0, Side::right);
        f.d_x1_plus = f.d(x1, 0, Side::right);
        f.c_x2_minus = f.c(x2, 0, Side::left);
        f.d_x2_minus = f.d(x2, 0, Side::left);
        f.dc_x1_plus = f.c(x1, 1, Side::right);
        f.dd_x1_plus = f.d(x1, 1, Side::right);
    }
    return f;
}

/// Closed-form sign-case displays written in terms of the cubic Delta. Reference values only, not used in any computation.
struct SignCaseDisplays {
    double delta;
    double c_x1_plus, d_x1_plus, c_x2_minus, d_x2_minus;
    double dc_x1_plus, dd_x1_plus;
};

inline double cubic_sign_case_delta(double x1, double x2) {
    return 1.0 + x2 - x1 - (x2 * x2 - x1 * x1) / 2.0 + (x2 * x2 * x2 - x1 * x1 * x1) / 3.0 +
           (x2 - x1) / 12.0 * (std::pow(x2 - x1, 3) + 6.0 * x1 * x2);
}

inline SignCaseDisplays sign_case_displays(double x1, double x2) {
    const double dl = cubic_sign_case_delta(x1, x2);
    const double q2 = (x2 * x2 - x1 * x1) / 2.0, q3 = (x2 * x2 * x2 - x1 * x1 * x1) / 3.0;
    const double lin = 1.0 + x2 - x1 - q2;
    return {dl,
            2.0 / dl * (1.0 + q3 - q2 * x1),
            -2.0 / dl * (lin * x1 - q2 + q3),
            2.0 / dl * (1.0 + q3 - q2 * x2),
            -2.0 / dl * (lin * x2 - q2 + q3),
            -1.0 / dl * (x2 * x2 - x1 * x1),
            2.0 / dl * (1.0 + x1 - x2 + q2)};
}

/**
 * Residuals of the four jump conditions of D(A_K*) at x1, x2:
 *   [v](x) = [c](x) int (1-t) v + [d](x) int t v   for values and first derivatives,
 * with [g](x) = g(x - 0) - g(x + 0). Order: value at x1, value at x2,
 * derivative at x1, derivative at x2.
 */
inline CVec adjoint_domain_residual(const GridFunction& v, const N2ClosedForms& forms,
                                    std::vector<double> points = {}) {
    if (points.empty()) points = forms.points;
    const auto p = numgrid::interpolant(v);
    const auto& grid = v.grid();
    const auto w1 = GridFunction::sample(grid, [](double x) { return 1.0 - x; });
    const auto w2 = GridFunction::sample(grid, [](double x) { return x; });
    const cplx alpha = numgrid::inner_product(v, w1);
    const cplx gamma = numgrid::inner_product(v, w2);
    CVec r(static_cast<Eigen::Index>(2 * points.size()));
    for (int k = 0; k < 2; ++k) {
        for (std::size_t i = 0; i < points.size(); ++i) {
            const double x = points[i];
            auto jump = [&](const Piecewise& g) { return g(x, k, Side::left) - g(x, k, Side::right); };
            r[static_cast<Eigen::Index>(k * points.size() + i)] =
                jump(p) - (jump(forms.c) * alpha + jump(forms.d) * gamma);
        }
    }
    return r;
}

} // namespace restrictlab::diffop
