#pragma once

#include "restrictlab/diffop/umatrix.hpp"
#include "restrictlab/opcore/operator.hpp"

#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace restrictlab::restriction {

using numgrid::cplx;
using numgrid::CMat;
using numgrid::CVec;
using numgrid::GridFunction;
using numgrid::GridPtr;
using opcore::OperatorMatrix;
using opcore::RankNOperator;
using opcore::Role;

inline constexpr double kDefaultDensityTolerance = 1e-10;

/// L_K^{-1} = L^{-1} + K.
inline OperatorMatrix restriction_inverse(const OperatorMatrix& L_inverse, const RankNOperator& K) {
    return (L_inverse + K.matrix()).with_role(Role::L_K_inverse);
}

struct DensityResult {
    bool dense;
    double smin;
    double norm;
};

/**
 * Dense-definiteness of L_K: Ker(I + K*L*) = {0}. The smallest singular value
 * is taken of the bounded closure (I + KL)* = I + L*K*, whose kernel is trivial
 * exactly when that of I + K*L* is.
 */
inline DensityResult density_check(const OperatorMatrix& L, const RankNOperator& K,
                                   double tol = kDefaultDensityTolerance) {
    const OperatorMatrix p = opcore::adjoint(OperatorMatrix::identity(L.grid()) + K.matrix() * L);
    const auto s = opcore::singular_values(p);
    const double smax = s[0], smin = s[s.size() - 1];
    return {smin > tol * smax, smin, smax};
}

struct RestrictionBundle {
    OperatorMatrix L;
    OperatorMatrix L_inverse;
    RankNOperator K;
    OperatorMatrix L_K_inverse;
    OperatorMatrix KL;
    OperatorMatrix KL_K;
    OperatorMatrix A_K;
    OperatorMatrix A_K_inverse;
    bool density_flag;
    double density_smin;

    const GridPtr& grid() const { return L.grid(); }
    /// P = I + KL, the similarity carrying A_K to L_K.
    OperatorMatrix P() const { return OperatorMatrix::identity(grid()) + KL; }
};

/**
 * KL = K L, KL_K = I - (I + KL)^{-1}, A_K = (I - KL_K) L,
 * A_K^{-1} = L^{-1}(I + KL).
 */
inline RestrictionBundle build_similar(const OperatorMatrix& L, const OperatorMatrix& L_inverse, const RankNOperator& K,
                                       double density_tol = kDefaultDensityTolerance,
                                       double singular_tol = opcore::kDefaultSingularThreshold) {
    const DensityResult d = density_check(L, K, density_tol);
    if (!d.dense) throw DegenerateError("L_K not densely defined (det U ≈ 0)", d.smin);
    const GridPtr& g = L.grid();
    const OperatorMatrix I = OperatorMatrix::identity(g);
    OperatorMatrix kl = (K.matrix() * L).with_role(Role::KL);
    const OperatorMatrix p_inv = opcore::inverse(I + kl, Role::generic, singular_tol);
    OperatorMatrix kl_k = (I - p_inv).with_role(Role::KL_K);
    OperatorMatrix a_k = (p_inv * L).with_role(Role::A_K);
    OperatorMatrix a_k_inv = (L_inverse * (I + kl)).with_role(Role::A_K_inverse);
    return {L,       L_inverse,  K, restriction_inverse(L_inverse, K), std::move(kl), std::move(kl_k), std::move(a_k),
            std::move(a_k_inv), d.dense, d.smin};
}

/// K for a spec on a grid: directions w_i, densities sigma_i.
inline RankNOperator assemble_K(const diffop::RestrictionSpec& spec, const GridPtr& grid) {
    return opcore::assemble_rank_n(diffop::kernel_basis(spec.order, spec.fixed, grid), diffop::sigma_samples(spec, grid));
}

inline RestrictionBundle build_bundle(const diffop::RestrictionSpec& spec, const GridPtr& grid,
                                      double density_tol = kDefaultDensityTolerance) {
    const auto f = diffop::fixed_L(spec, grid);
    return build_similar(f.L, f.L_inverse, assemble_K(spec, grid), density_tol);
}

/// A_K* = L*(I - (KL_K)*) with weighted adjoints.
inline OperatorMatrix build_adjoint_similar(const RestrictionBundle& b) {
    const OperatorMatrix I = OperatorMatrix::identity(b.grid());
    return (opcore::adjoint(b.L) * (I - opcore::adjoint(b.KL_K))).with_role(Role::A_K, true);
}

/**
 * (A_K*)^{-1} = (I + L*K*)(L*)^{-1} with L* sigma_i = s(-1)^n sigma_i^(n) sampled
 * from the kernel data instead of applying the discrete L*, whose large norm
 * puts roundoff into the one-sided derivatives at the sigma breakpoints.
 */
inline OperatorMatrix adjoint_inverse_classical(const RestrictionBundle& b, const diffop::RestrictionSpec& spec) {
    const GridPtr& g = b.grid();
    std::vector<GridFunction> ls;
    for (const auto& s : diffop::sigma_n_samples(spec, g)) ls.push_back(diffop::adjoint_factor(spec) * s);
    const RankNOperator lk = opcore::assemble_rank_n(std::move(ls), diffop::kernel_basis(spec.order, spec.fixed, g));
    const OperatorMatrix I = OperatorMatrix::identity(g);
    return ((I + lk.matrix()) * opcore::adjoint(b.L_inverse)).with_role(Role::A_K_inverse, true);
}

inline double relative_distance(const OperatorMatrix& a, const OperatorMatrix& b, double scale) {
    return opcore::operator_norm(a - b) / scale;
}

struct IdentityResiduals {
    double neumann_left;   // ||(I+KL)(I-KL_K) - I|| / (||I+KL|| ||I-KL_K||)
    double neumann_right;  // ||(I-KL_K)(I+KL) - I|| / (||I+KL|| ||I-KL_K||)
    double inverse_chain;  // ||A_K^{-1} - (I+KL)^{-1} L_K^{-1} (I+KL)|| / ||A_K^{-1}||
    double inverse_direct; // ||A_K A_K^{-1} - I||
    double lk_inverse_sum; // ||L_K^{-1} - (L^{-1} + K)|| / ||L_K^{-1}||
};

inline IdentityResiduals identity_residuals(const RestrictionBundle& b) {
    const OperatorMatrix I = OperatorMatrix::identity(b.grid());
    const OperatorMatrix p = b.P();
    const OperatorMatrix q = I - b.KL_K;
    const double pq = opcore::operator_norm(p) * opcore::operator_norm(q);
    const OperatorMatrix chain = opcore::inverse(p) * b.L_K_inverse * p;
    const double ak_inv_norm = opcore::operator_norm(b.A_K_inverse);
    return {relative_distance(p * q, I, pq), relative_distance(q * p, I, pq),
            relative_distance(b.A_K_inverse, chain, ak_inv_norm), relative_distance(b.A_K * b.A_K_inverse, I, 1.0),
            relative_distance(b.L_K_inverse, b.L_inverse + b.K.matrix(), opcore::operator_norm(b.L_K_inverse))};
}

struct ProbeResult {
    std::vector<std::size_t> sizes;
    std::vector<double> norms;
    bool bounded;
    bool unbounded;
    std::string verdict;
};

/// ||KL|| per grid. Bounded: max/min over the last three grids <= 1.5. Unbounded: monotone growth by more than 2.
inline ProbeResult kl_probe(const diffop::RestrictionSpec& spec, numgrid::Scheme scheme,
                            const std::vector<std::size_t>& sizes) {
    if (sizes.empty()) throw ConfigError("kl_probe needs at least one grid size");
    ProbeResult r{sizes, {}, false, false, ""};
    for (std::size_t n : sizes) {
        const GridPtr g = spec.make_grid(scheme, n);
        const auto f = diffop::fixed_L(spec, g);
        r.norms.push_back(opcore::operator_norm(assemble_K(spec, g).matrix() * f.L));
    }
    const std::size_t m = r.norms.size();
    const std::size_t first = m >= 3 ? m - 3 : 0;
    double lo = r.norms[first], hi = r.norms[first];
    for (std::size_t i = first; i < m; ++i) {
        lo = std::min(lo, r.norms[i]);
        hi = std::max(hi, r.norms[i]);
    }
    r.bounded = (hi == 0.0) || (lo > 0.0 && hi / lo <= 1.5);
    bool monotone = true;
    for (std::size_t i = 1; i < m; ++i) monotone = monotone && r.norms[i] > r.norms[i - 1];
    r.unbounded = monotone && m >= 2 && r.norms.front() > 0.0 && r.norms.back() / r.norms.front() > 2.0;
    r.verdict = r.bounded ? "bounded" : (r.unbounded ? "unbounded" : "inconclusive");
    return r;
}

/**
 * Proxy for D(L*) = D(L_K*): the largest principal-angle sine between
 * span{(L_K*)^{-1} f_k} and span{(L*)^{-1} f_k, (L*)^{-1} L* sigma_i}, where
 * f_k are the first m sine modes and L* sigma_i = s(-1)^n sigma_i^(n) is the
 * classical adjoint action. Small exactly when K* maps into D(L*).
 */
inline double domain_containment_angle(const RestrictionBundle& b, const diffop::RestrictionSpec& spec,
                                       std::size_t m = 8) {
    const GridPtr& g = b.grid();
    const auto n = static_cast<Eigen::Index>(g->size());
    const OperatorMatrix g_star = opcore::adjoint(b.L_inverse);
    const OperatorMatrix lk_star_inv = opcore::adjoint(b.L_K_inverse);
    const auto sn = diffop::sigma_n_samples(spec, g);
    const auto k = static_cast<Eigen::Index>(m);
    const auto r = static_cast<Eigen::Index>(sn.size());
    CMat f(n, k), s1(n, k), s2(n, k + r);
    for (Eigen::Index j = 0; j < k; ++j) {
        f.col(j) = GridFunction::sample(g, [j](double x) { return std::sin(static_cast<double>(j + 1) * std::numbers::pi * x); })
                       .values();
    }
    s1 = lk_star_inv.matrix() * f;
    s2.leftCols(k) = g_star.matrix() * f;
    for (Eigen::Index i = 0; i < r; ++i) {
        s2.col(k + i) = diffop::adjoint_factor(spec) * (g_star.matrix() * sn[static_cast<std::size_t>(i)].values());
    }
    const Eigen::VectorXd d = opcore::sqrt_weights(*g);
    auto orth = [&](const CMat& a) {
        const CMat wa = d.asDiagonal() * a;
        Eigen::ColPivHouseholderQR<CMat> qr(wa);
        const auto rank = qr.rank();
        return CMat(CMat(qr.householderQ()).leftCols(rank));
    };
    const CMat q1 = orth(s1), q2 = orth(s2);
    const CMat resid = q1 - q2 * (q2.adjoint() * q1);
    return Eigen::BDCSVD<CMat>(resid).singularValues()[0];
}

} // namespace restrictlab::restriction
