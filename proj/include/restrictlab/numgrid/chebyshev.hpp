#pragma once

// Low-level polynomial kernels: Gauss-Legendre rules, Chebyshev series
// arithmetic on [-1, 1], and Fornberg finite-difference weights.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>
#include <utility>
#include <vector>

namespace restrictlab::numgrid {

using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

/// Gauss-Legendre nodes (increasing) and weights on [-1, 1].
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(std::size_t n) {
    std::vector<double> nodes(n), weights(n);
    for (std::size_t i = 0; i < n; ++i) {
        // Newton on P_n from the Tricomi initial guess; root i counted from the right.
        double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                            (static_cast<double>(n) + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (std::size_t k = 2; k <= n; ++k) {
                const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
                p0 = p1;
                p1 = pk;
            }
            if (n == 1) {
                p1 = x;
                p0 = 1.0;
            }
            dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        double p0 = 1.0, p1 = x;
        for (std::size_t k = 2; k <= n; ++k) {
            const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
            p0 = p1;
            p1 = pk;
        }
        if (n == 1) p0 = 1.0;
        dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return {nodes, weights};
}

/// V(k, j) = T_j(t_k).
inline Eigen::MatrixXd chebyshev_vandermonde(const std::vector<double>& t, std::size_t degree_count) {
    Eigen::MatrixXd v(static_cast<Eigen::Index>(t.size()), static_cast<Eigen::Index>(degree_count));
    for (std::size_t k = 0; k < t.size(); ++k) {
        double tm1 = 1.0, tc = t[k];
        for (std::size_t j = 0; j < degree_count; ++j) {
            if (j == 0) {
                v(k, j) = 1.0;
            } else if (j == 1) {
                v(k, j) = t[k];
            } else {
                const double tn = 2.0 * t[k] * tc - tm1;
                tm1 = tc;
                tc = tn;
                v(k, j) = tn;
            }
        }
    }
    return v;
}

/// Clenshaw evaluation of sum_j c_j T_j(t).
inline cplx chebyshev_eval(const CVec& c, double t) {
    cplx b1 = 0.0, b2 = 0.0;
    for (Eigen::Index j = c.size() - 1; j >= 1; --j) {
        const cplx b0 = 2.0 * t * b1 - b2 + c[j];
        b2 = b1;
        b1 = b0;
    }
    if (c.size() == 0) return 0.0;
    return t * b1 - b2 + c[0];
}

/// Coefficients of d/dt of a Chebyshev series.
inline CVec chebyshev_derivative(const CVec& c) {
    const Eigen::Index n = c.size();
    if (n <= 1) return CVec::Zero(1);
    CVec d = CVec::Zero(n + 1);
    for (Eigen::Index j = n - 1; j >= 1; --j) {
        d[j - 1] = d[j + 1] + 2.0 * static_cast<double>(j) * c[j];
    }
    d[0] *= 0.5;
    return d.head(n - 1);
}

/// Coefficients of the antiderivative in t that vanishes at t = -1.
inline CVec chebyshev_integral(const CVec& c) {
    const Eigen::Index n = c.size();
    CVec padded = CVec::Zero(n + 2);
    padded.head(n) = c;
    CVec r = CVec::Zero(n + 1);
    for (Eigen::Index j = 1; j <= n; ++j) {
        const cplx prev = (j == 1) ? 2.0 * padded[0] : padded[j - 1];
        r[j] = (prev - padded[j + 1]) / (2.0 * static_cast<double>(j));
    }
    // fix the constant so the value at t = -1 is zero: T_j(-1) = (-1)^j
    cplx at_minus_one = 0.0;
    for (Eigen::Index j = 1; j <= n; ++j) at_minus_one += (j % 2 == 0 ? 1.0 : -1.0) * r[j];
    r[0] = -at_minus_one;
    return r;
}

/// Fornberg's algorithm: weights w[m][j] for the m-th derivative at z from samples at xs.
inline std::vector<std::vector<double>> fornberg_weights(double z, const std::vector<double>& xs, int max_order) {
    const std::size_t n = xs.size();
    std::vector<std::vector<double>> c(static_cast<std::size_t>(max_order) + 1, std::vector<double>(n, 0.0));
    double c1 = 1.0, c4 = xs[0] - z;
    c[0][0] = 1.0;
    for (std::size_t i = 1; i < n; ++i) {
        const int mn = std::min<int>(static_cast<int>(i), max_order);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = xs[i] - z;
        for (std::size_t j = 0; j < i; ++j) {
            const double c3 = xs[i] - xs[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k) {
                    c[k][i] = c1 * (k * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for (int k = mn; k >= 1; --k) {
                c[k][j] = (c4 * c[k][j] - k * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    return c;
}

} // namespace restrictlab::numgrid
