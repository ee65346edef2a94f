#pragma once

#include "restrictlab/errors.hpp"
#include "restrictlab/numgrid/grid.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <string>
#include <vector>

namespace restrictlab::opcore {

using numgrid::cplx;
using numgrid::CMat;
using numgrid::CVec;
using numgrid::GridFunction;
using numgrid::GridPtr;

enum class Role { L, L_inverse, K, KL, KL_K, L_K_inverse, A_K, A_K_inverse, generic };

inline std::string to_string(Role r) {
    switch (r) {
    case Role::L: return "L";
    case Role::L_inverse: return "L_inverse";
    case Role::K: return "K";
    case Role::KL: return "KL";
    case Role::KL_K: return "KL_K";
    case Role::L_K_inverse: return "L_K_inverse";
    case Role::A_K: return "A_K";
    case Role::A_K_inverse: return "A_K_inverse";
    case Role::generic: return "generic";
    }
    return "generic";
}

/// Dense matrix acting on grid functions, adjoint-consistent with the grid's quadrature weights.
class OperatorMatrix {
public:
    OperatorMatrix(GridPtr grid, CMat m, Role role = Role::generic, bool adjoint = false)
        : grid_(std::move(grid)), m_(std::move(m)), role_(role), adjoint_(adjoint) {
        if (!grid_) throw ConfigError("operator without grid");
        const auto n = static_cast<Eigen::Index>(grid_->size());
        if (m_.rows() != n || m_.cols() != n) {
            throw ConfigError("operator is " + std::to_string(m_.rows()) + "x" + std::to_string(m_.cols()) +
                              " but grid has " + std::to_string(n) + " nodes");
        }
    }

    static OperatorMatrix identity(const GridPtr& grid) {
        const auto n = static_cast<Eigen::Index>(grid->size());
        return {grid, CMat::Identity(n, n)};
    }

    static OperatorMatrix zero(const GridPtr& grid) {
        const auto n = static_cast<Eigen::Index>(grid->size());
        return {grid, CMat::Zero(n, n)};
    }

    const GridPtr& grid() const noexcept { return grid_; }
    const CMat& matrix() const noexcept { return m_; }
    Role role() const noexcept { return role_; }
    bool is_adjoint() const noexcept { return adjoint_; }
    std::string name() const { return adjoint_ ? "adjoint-of-" + to_string(role_) : to_string(role_); }
    Eigen::Index size() const noexcept { return m_.rows(); }

    OperatorMatrix with_role(Role r, bool adjoint = false) const { return {grid_, m_, r, adjoint}; }

    GridFunction apply(const GridFunction& f) const {
        require_grid(*f.grid());
        return {grid_, m_ * f.values()};
    }
    GridFunction operator()(const GridFunction& f) const { return apply(f); }

    void require_grid(const numgrid::Grid& g) const {
        if (!grid_->same_as(g)) throw ConfigError("grid mismatch");
    }

    friend OperatorMatrix operator*(const OperatorMatrix& a, const OperatorMatrix& b) {
        a.require_grid(*b.grid_);
        return {a.grid_, a.m_ * b.m_};
    }
    friend OperatorMatrix operator+(const OperatorMatrix& a, const OperatorMatrix& b) {
        a.require_grid(*b.grid_);
        return {a.grid_, a.m_ + b.m_};
    }
    friend OperatorMatrix operator-(const OperatorMatrix& a, const OperatorMatrix& b) {
        a.require_grid(*b.grid_);
        return {a.grid_, a.m_ - b.m_};
    }
    friend OperatorMatrix operator*(cplx s, const OperatorMatrix& a) { return {a.grid_, s * a.m_}; }

private:
    GridPtr grid_;
    CMat m_;
    Role role_;
    bool adjoint_;
};

inline Eigen::VectorXd sqrt_weights(const numgrid::Grid& g) {
    Eigen::VectorXd d(static_cast<Eigen::Index>(g.size()));
    for (std::size_t j = 0; j < g.size(); ++j) d[static_cast<Eigen::Index>(j)] = std::sqrt(g.weights()[j]);
    return d;
}

/// D A D^{-1} with D = diag(sqrt(rho)): the matrix of A in an orthonormal frame of the weighted space.
inline CMat weighted_form(const OperatorMatrix& a) {
    const Eigen::VectorXd d = sqrt_weights(*a.grid());
    return d.asDiagonal() * a.matrix() * d.cwiseInverse().asDiagonal();
}

/// A* = W^{-1} A^H W, the adjoint for the weighted inner product.
inline OperatorMatrix adjoint(const OperatorMatrix& a) {
    Eigen::VectorXd w(a.size());
    for (Eigen::Index j = 0; j < a.size(); ++j) w[j] = a.grid()->weights()[static_cast<std::size_t>(j)];
    CMat m = w.cwiseInverse().asDiagonal() * a.matrix().adjoint() * w.asDiagonal();
    return {a.grid(), std::move(m), a.role(), !a.is_adjoint()};
}

/// Singular values in the weighted norm, descending.
inline Eigen::VectorXd singular_values(const OperatorMatrix& a) {
    return Eigen::BDCSVD<CMat>(weighted_form(a)).singularValues();
}

inline double min_singular_value(const OperatorMatrix& a) {
    const auto s = singular_values(a);
    return s.size() ? s[s.size() - 1] : 0.0;
}

inline double operator_norm(const OperatorMatrix& a) {
    const auto s = singular_values(a);
    return s.size() ? s[0] : 0.0;
}

inline double norm(const OperatorMatrix& a) { return operator_norm(a); }

inline constexpr double kDefaultSingularThreshold = 1e-12;

/// Solve A u = f; rejects A whose smallest singular value is below threshold * ||A||.
inline GridFunction solve(const OperatorMatrix& a, const GridFunction& f,
                          double threshold = kDefaultSingularThreshold) {
    a.require_grid(*f.grid());
    const auto s = singular_values(a);
    const double smax = s.size() ? s[0] : 0.0;
    const double smin = s.size() ? s[s.size() - 1] : 0.0;
    if (!(smin > threshold * smax)) {
        throw NumericalError("operator is numerically singular (smallest singular value " + std::to_string(smin) + ")",
                             smin);
    }
    const Eigen::PartialPivLU<CMat> lu(a.matrix());
    CVec u = lu.solve(f.values());
    u += lu.solve((f.values() - a.matrix() * u).eval());
    return {a.grid(), std::move(u)};
}

/// Dense inverse with the same singularity guard as solve.
inline OperatorMatrix inverse(const OperatorMatrix& a, Role role = Role::generic,
                              double threshold = kDefaultSingularThreshold) {
    const auto s = singular_values(a);
    const double smax = s.size() ? s[0] : 0.0;
    const double smin = s.size() ? s[s.size() - 1] : 0.0;
    if (!(smin > threshold * smax)) {
        throw NumericalError("operator is numerically singular (smallest singular value " + std::to_string(smin) + ")",
                             smin);
    }
    return {a.grid(), a.matrix().partialPivLu().inverse(), role};
}

/// K f = sum_i w_i <f, sigma_i>.
class RankNOperator {
public:
    RankNOperator(std::vector<GridFunction> ws, std::vector<GridFunction> sigmas, OperatorMatrix k)
        : ws_(std::move(ws)), sigmas_(std::move(sigmas)), k_(std::move(k)) {}

    const std::vector<GridFunction>& ws() const noexcept { return ws_; }
    const std::vector<GridFunction>& sigmas() const noexcept { return sigmas_; }
    const OperatorMatrix& matrix() const noexcept { return k_; }
    const GridPtr& grid() const noexcept { return k_.grid(); }
    std::size_t rank() const noexcept { return ws_.size(); }

    /// Direct evaluation from the defining sum, independent of the assembled matrix.
    GridFunction apply(const GridFunction& f) const {
        GridFunction out = GridFunction::zero(k_.grid());
        for (std::size_t i = 0; i < ws_.size(); ++i) out += numgrid::inner_product(f, sigmas_[i]) * ws_[i];
        return out;
    }

private:
    std::vector<GridFunction> ws_;
    std::vector<GridFunction> sigmas_;
    OperatorMatrix k_;
};

inline RankNOperator assemble_rank_n(std::vector<GridFunction> ws, std::vector<GridFunction> sigmas) {
    if (ws.empty()) throw ConfigError("rank-n operator needs at least one direction");
    if (ws.size() != sigmas.size()) {
        throw ConfigError("rank-n operator: " + std::to_string(ws.size()) + " directions but " +
                          std::to_string(sigmas.size()) + " densities");
    }
    const GridPtr& grid = ws.front().grid();
    for (std::size_t i = 0; i < ws.size(); ++i) {
        ws.front().require_same(ws[i]);
        ws.front().require_same(sigmas[i]);
    }
    const auto n = static_cast<Eigen::Index>(grid->size());
    CMat k = CMat::Zero(n, n);
    Eigen::VectorXd rho(n);
    for (Eigen::Index m = 0; m < n; ++m) rho[m] = grid->weights()[static_cast<std::size_t>(m)];
    for (std::size_t i = 0; i < ws.size(); ++i) {
        const CVec right = rho.asDiagonal() * sigmas[i].values().conjugate();
        k += ws[i].values() * right.transpose();
    }
    OperatorMatrix km(grid, std::move(k), Role::K);
    return {std::move(ws), std::move(sigmas), std::move(km)};
}

/// K* f = sum_i sigma_i <f, w_i>.
inline RankNOperator adjoint(const RankNOperator& k) {
    RankNOperator swapped = assemble_rank_n(k.sigmas(), k.ws());
    return {swapped.ws(), swapped.sigmas(), swapped.matrix().with_role(Role::K, true)};
}

} // namespace restrictlab::opcore
