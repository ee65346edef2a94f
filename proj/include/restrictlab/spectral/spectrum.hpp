#pragma once

#include "restrictlab/errors.hpp"
#include "restrictlab/opcore/operator.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace restrictlab::spectral {

using numgrid::cplx;
using numgrid::CMat;
using numgrid::CVec;
using numgrid::GridFunction;
using numgrid::GridPtr;
using opcore::OperatorMatrix;

inline constexpr double kDefaultBracketGap = 1e-3;
inline constexpr double kDefaultResidualTolerance = 1e-8;

struct SpectrumOptions {
    double bracket_gap = kDefaultBracketGap;
    double residual_tol = kDefaultResidualTolerance;
};

/**
 * Eigenpairs sorted by modulus, ties by argument. residuals[k] is the relative
 * residual ||B u - theta u|| / (|theta| ||u||) of the matrix B actually
 * diagonalized (A itself, or A^{-1} with theta = 1/lambda).
 */
struct Spectrum {
    GridPtr grid;
    std::vector<cplx> values;
    std::vector<GridFunction> vectors;
    std::vector<double> residuals;
    std::vector<std::vector<std::size_t>> brackets;
    std::size_t excluded = 0;

    std::size_t size() const noexcept { return values.size(); }
};

inline std::vector<std::vector<std::size_t>> group_brackets(const std::vector<cplx>& values, double gap) {
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t k = 0; k < values.size(); ++k) {
        if (!out.empty()) {
            const cplx prev = values[out.back().back()];
            const double scale = std::max(std::abs(prev), std::abs(values[k]));
            if (std::abs(values[k] - prev) <= gap * scale) {
                out.back().push_back(k);
                continue;
            }
        }
        out.push_back({k});
    }
    return out;
}

/// Order by modulus; runs of equal modulus (to 1e-9 relative) are ordered by argument.
inline std::vector<std::size_t> spectral_order(const std::vector<cplx>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return std::abs(v[a]) < std::abs(v[b]); });
    std::size_t start = 0;
    for (std::size_t k = 1; k <= idx.size(); ++k) {
        const bool split = k == idx.size() ||
                           std::abs(v[idx[k]]) - std::abs(v[idx[k - 1]]) > 1e-9 * std::max(1.0, std::abs(v[idx[k]]));
        if (split) {
            std::stable_sort(idx.begin() + static_cast<std::ptrdiff_t>(start), idx.begin() + static_cast<std::ptrdiff_t>(k),
                             [&](auto a, auto b) {
                                 // treat roundoff-level imaginary parts as zero
                                 auto arg = [&](std::size_t i) {
                                     const double im = std::abs(v[i].imag()) <= 1e-12 * std::abs(v[i]) ? 0.0 : v[i].imag();
                                     return std::atan2(im, v[i].real());
                                 };
                                 return arg(a) < arg(b);
                             });
            start = k;
        }
    }
    return idx;
}

inline GridFunction normalized(GridFunction f) {
    Eigen::Index big = 0;
    f.values().cwiseAbs().maxCoeff(&big);
    const cplx pivot = f.values()[big];
    if (std::abs(pivot) > 0.0) f *= std::abs(pivot) / pivot;
    const double nrm = numgrid::norm(f);
    if (nrm > 0.0) f *= 1.0 / nrm;
    return f;
}

namespace detail {

inline Spectrum solve(const OperatorMatrix& b, std::size_t m, bool inverse, const SpectrumOptions& opt) {
    const auto n = static_cast<std::size_t>(b.size());
    if (m == 0 || m > n) throw ConfigError("eigenpair count must be in 1.." + std::to_string(n));
    Eigen::ComplexEigenSolver<CMat> es(b.matrix(), true);
    if (es.info() != Eigen::Success) throw NumericalError("eigen-solver failed to converge", 0.0);
    std::vector<cplx> lam(n);
    for (std::size_t k = 0; k < n; ++k) {
        const cplx theta = es.eigenvalues()[static_cast<Eigen::Index>(k)];
        lam[k] = inverse ? (std::abs(theta) > 0.0 ? 1.0 / theta : cplx(INFINITY, 0.0)) : theta;
    }
    const auto order = spectral_order(lam);
    Spectrum s;
    s.grid = b.grid();
    for (std::size_t idx : order) {
        if (s.values.size() == m) break;
        const cplx theta = es.eigenvalues()[static_cast<Eigen::Index>(idx)];
        GridFunction u = normalized(GridFunction(b.grid(), es.eigenvectors().col(static_cast<Eigen::Index>(idx))));
        const double res = numgrid::norm(GridFunction(b.grid(), b.matrix() * u.values() - theta * u.values())) /
                           std::max(std::abs(theta), 1e-300);
        if (!(res <= opt.residual_tol) || !std::isfinite(std::abs(lam[idx]))) {
            ++s.excluded;
            continue;
        }
        s.values.push_back(lam[idx]);
        s.vectors.push_back(std::move(u));
        s.residuals.push_back(res);
    }
    s.brackets = group_brackets(s.values, opt.bracket_gap);
    return s;
}

} // namespace detail

/// m smallest-modulus eigenpairs of A, computed directly.
inline Spectrum eigenpairs(const OperatorMatrix& a, std::size_t m, const SpectrumOptions& opt = {}) {
    return detail::solve(a, m, false, opt);
}

/// m smallest-modulus eigenpairs of A given only A^{-1}: eigenvalues of the inverse, reciprocated.
inline Spectrum eigenpairs_from_inverse(const OperatorMatrix& a_inverse, std::size_t m,
                                        const SpectrumOptions& opt = {}) {
    return detail::solve(a_inverse, m, true, opt);
}

/// Eigenpairs of an invertible A through its inverse (better relative accuracy for the low modes).
inline Spectrum eigenpairs_via_inverse(const OperatorMatrix& a, std::size_t m, const SpectrumOptions& opt = {}) {
    return eigenpairs_from_inverse(opcore::inverse(a), m, opt);
}

struct SpectrumMatch {
    std::vector<double> deviations;
    double max_deviation = 0.0;
    bool pass = false;
};

/// Greedy nearest matching of the first m values of s1 against s2; relative deviations.
inline SpectrumMatch compare_spectra(const std::vector<cplx>& s1, const std::vector<cplx>& s2, std::size_t m,
                                     double tol) {
    if (s1.size() < m || s2.size() < m) throw ConfigError("compare_spectra: insufficient eigenpairs");
    SpectrumMatch r;
    std::vector<bool> used(s2.size(), false);
    for (std::size_t i = 0; i < m; ++i) {
        std::size_t best = s2.size();
        double dist = INFINITY;
        for (std::size_t j = 0; j < s2.size(); ++j) {
            if (!used[j] && std::abs(s1[i] - s2[j]) < dist) {
                dist = std::abs(s1[i] - s2[j]);
                best = j;
            }
        }
        used[best] = true;
        r.deviations.push_back(dist / std::max(std::abs(s1[i]), 1e-300));
    }
    r.max_deviation = *std::max_element(r.deviations.begin(), r.deviations.end());
    r.pass = r.max_deviation <= tol;
    return r;
}

inline SpectrumMatch compare_spectra(const Spectrum& s1, const Spectrum& s2, std::size_t m, double tol) {
    return compare_spectra(s1.values, s2.values, m, tol);
}

/**
 * u_k = (I + KL) v_k, normalized. residuals[k] = ||u_k - lambda_k L_K^{-1} u_k|| / ||u_k||.
 */
inline Spectrum map_eigenfunctions(const Spectrum& s, const OperatorMatrix& KL, const OperatorMatrix& L_K_inverse) {
    Spectrum out;
    out.grid = s.grid;
    out.values = s.values;
    out.brackets = s.brackets;
    const OperatorMatrix p = OperatorMatrix::identity(s.grid) + KL;
    for (std::size_t k = 0; k < s.size(); ++k) {
        GridFunction u = normalized(p.apply(s.vectors[k]));
        const GridFunction fixed = s.values[k] * L_K_inverse.apply(u);
        out.residuals.push_back(numgrid::norm(u - fixed) / numgrid::norm(u));
        out.vectors.push_back(std::move(u));
    }
    return out;
}

struct RieszProxy {
    std::size_t count = 0;
    double condition = 0.0;
    double biorthogonality_error = 0.0;
    bool rank_deficient = false;
};

/**
 * Gram-matrix condition number of the first m eigenvectors, after
 * orthonormalizing each bracket. Brackets are never split, so count may
 * exceed m. The dual family E M^{-1} is checked for <e_i, e~_j> = delta_ij.
 */
inline RieszProxy riesz_gram_proxy(const Spectrum& s, std::size_t m) {
    if (s.vectors.size() < m) throw ConfigError("riesz proxy: fewer than m eigenvectors");
    const GridPtr& g = s.grid;
    const Eigen::VectorXd d = opcore::sqrt_weights(*g);
    std::vector<CVec> cols;
    RieszProxy r;
    for (const auto& br : s.brackets) {
        if (cols.size() >= m) break;
        CMat block(d.size(), static_cast<Eigen::Index>(br.size()));
        for (std::size_t j = 0; j < br.size(); ++j) {
            block.col(static_cast<Eigen::Index>(j)) = d.asDiagonal() * s.vectors[br[j]].values();
        }
        Eigen::HouseholderQR<CMat> qr(block);
        const CMat rr = qr.matrixQR().topRows(block.cols()).triangularView<Eigen::Upper>();
        const CMat q = CMat(qr.householderQ()).leftCols(block.cols());
        for (Eigen::Index j = 0; j < block.cols(); ++j) {
            if (std::abs(rr(j, j)) < 1e-8 * std::max(1.0, std::abs(rr(0, 0)))) r.rank_deficient = true;
            cols.push_back(q.col(j));
        }
    }
    const auto k = static_cast<Eigen::Index>(cols.size());
    CMat e(d.size(), k);
    for (Eigen::Index j = 0; j < k; ++j) e.col(j) = cols[static_cast<std::size_t>(j)];
    const CMat gram = e.adjoint() * e;
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<CMat>(gram).eigenvalues();
    r.count = static_cast<std::size_t>(k);
    r.condition = ev[0] > 0.0 ? ev[k - 1] / ev[0] : INFINITY;
    if (!(ev[0] > 1e-12 * ev[k - 1])) r.rank_deficient = true;
    if (!r.rank_deficient) {
        const CMat dual = e * gram.inverse();
        r.biorthogonality_error = (e.adjoint() * dual - CMat::Identity(k, k)).cwiseAbs().maxCoeff();
    } else {
        r.biorthogonality_error = INFINITY;
    }
    return r;
}

} // namespace restrictlab::spectral
