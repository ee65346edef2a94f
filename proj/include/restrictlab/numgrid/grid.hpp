#pragma once

#include "restrictlab/errors.hpp"
#include "restrictlab/numgrid/chebyshev.hpp"
#include "restrictlab/numgrid/piecewise.hpp"

#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace restrictlab::numgrid {

enum class Scheme { uniform, collocation };

inline std::string to_string(Scheme s) { return s == Scheme::uniform ? "uniform" : "collocation"; }

/// A contiguous block of nodes carrying one polynomial interpolant.
struct Panel {
    double a;
    double b;
    std::size_t first;
    std::size_t count;
};

/**
 * Discretization of (0, 1).
 *
 * uniform: N equispaced nodes including both endpoints, composite trapezoid
 * weights, finite-difference calculus.
 *
 * collocation: Gauss-Legendre nodes on panels split at the given breakpoints
 * (and further subdivided to at most kMaxPanelSize nodes), Gauss weights, one
 * polynomial interpolant per panel. Jumps of the data at
 * breakpoints are represented exactly.
 */
class Grid {
public:
    Grid(Scheme scheme, std::vector<double> nodes, std::vector<double> weights, std::vector<Panel> panels)
        : scheme_(scheme), nodes_(std::move(nodes)), weights_(std::move(weights)), panels_(std::move(panels)) {}

    Scheme scheme() const noexcept { return scheme_; }
    std::size_t size() const noexcept { return nodes_.size(); }
    const std::vector<double>& nodes() const noexcept { return nodes_; }
    const std::vector<double>& weights() const noexcept { return weights_; }
    const std::vector<Panel>& panels() const noexcept { return panels_; }

    double spacing() const { return nodes_[1] - nodes_[0]; }

    std::vector<double> breakpoints() const {
        std::vector<double> b;
        for (std::size_t p = 1; p < panels_.size(); ++p) b.push_back(panels_[p].a);
        return b;
    }

    bool same_as(const Grid& other) const {
        return this == &other ||
               (scheme_ == other.scheme_ && nodes_ == other.nodes_ && weights_ == other.weights_);
    }

private:
    Scheme scheme_;
    std::vector<double> nodes_;
    std::vector<double> weights_;
    std::vector<Panel> panels_;
};

using GridPtr = std::shared_ptr<const Grid>;

inline constexpr std::size_t kMinGridSize = 8;
inline constexpr std::size_t kMinPanelSize = 6;
inline constexpr std::size_t kMaxPanelSize = 24;

inline GridPtr build_grid(Scheme scheme, std::size_t n, std::span<const double> breakpoints = {}) {
    if (n < kMinGridSize) {
        throw ConfigError("grid too small: N = " + std::to_string(n) + " < " + std::to_string(kMinGridSize));
    }
    if (scheme == Scheme::uniform) {
        std::vector<double> x(n), w(n);
        const double h = 1.0 / static_cast<double>(n - 1);
        for (std::size_t j = 0; j < n; ++j) {
            x[j] = static_cast<double>(j) * h;
            w[j] = h;
        }
        x.back() = 1.0;
        w.front() = w.back() = 0.5 * h;
        return std::make_shared<Grid>(scheme, std::move(x), std::move(w), std::vector<Panel>{{0.0, 1.0, 0, n}});
    }

    std::vector<double> b{0.0};
    for (double p : breakpoints) {
        if (!(p > 0.0 && p < 1.0)) throw ConfigError("grid breakpoint outside (0,1)");
        if (!(p > b.back())) throw ConfigError("grid breakpoints must be strictly increasing");
        b.push_back(p);
    }
    b.push_back(1.0);
    // Subdivide so that no panel needs more than kMaxPanelSize nodes.
    std::vector<double> sub{0.0};
    for (std::size_t p = 0; p + 1 < b.size(); ++p) {
        const double len = b[p + 1] - b[p];
        const auto pieces = static_cast<std::size_t>(
            std::max(1.0, std::ceil(static_cast<double>(n) * len / static_cast<double>(kMaxPanelSize))));
        for (std::size_t k = 1; k < pieces; ++k) sub.push_back(b[p] + len * static_cast<double>(k) / static_cast<double>(pieces));
        sub.push_back(b[p + 1]);
    }
    b = std::move(sub);
    const std::size_t panel_count = b.size() - 1;

    // Largest-remainder apportionment of nodes by panel length.
    std::vector<std::size_t> counts(panel_count);
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t used = 0;
    for (std::size_t p = 0; p < panel_count; ++p) {
        const double share = static_cast<double>(n) * (b[p + 1] - b[p]);
        counts[p] = static_cast<std::size_t>(std::floor(share));
        used += counts[p];
        remainders.emplace_back(share - std::floor(share), p);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& l, const auto& r) { return l.first > r.first; });
    for (std::size_t k = 0; used < n; ++k, ++used) ++counts[remainders[k % panel_count].second];
    for (std::size_t c : counts) {
        if (c < kMinPanelSize) {
            throw ConfigError("grid too small for breakpoints: a panel would get " + std::to_string(c) +
                              " nodes (need " + std::to_string(kMinPanelSize) + ")");
        }
    }

    std::vector<double> x, w;
    std::vector<Panel> panels;
    for (std::size_t p = 0; p < panel_count; ++p) {
        const auto [t, tw] = gauss_legendre(counts[p]);
        const double a = b[p], c = b[p + 1];
        panels.push_back({a, c, x.size(), counts[p]});
        for (std::size_t k = 0; k < counts[p]; ++k) {
            x.push_back(0.5 * (a + c) + 0.5 * (c - a) * t[k]);
            w.push_back(0.5 * (c - a) * tw[k]);
        }
    }
    return std::make_shared<Grid>(scheme, std::move(x), std::move(w), std::move(panels));
}

/// Sampled complex function bound to a grid.
class GridFunction {
public:
    GridFunction(GridPtr grid, CVec values) : grid_(std::move(grid)), values_(std::move(values)) {
        if (!grid_) throw ConfigError("grid function without grid");
        if (static_cast<std::size_t>(values_.size()) != grid_->size()) {
            throw ConfigError("grid function: value count " + std::to_string(values_.size()) +
                              " != node count " + std::to_string(grid_->size()));
        }
    }

    static GridFunction zero(const GridPtr& grid) {
        return {grid, CVec::Zero(static_cast<Eigen::Index>(grid->size()))};
    }

    template <class F>
    static GridFunction sample(const GridPtr& grid, F&& f) {
        CVec v(static_cast<Eigen::Index>(grid->size()));
        for (std::size_t j = 0; j < grid->size(); ++j) v[static_cast<Eigen::Index>(j)] = cplx(f(grid->nodes()[j]));
        return {grid, std::move(v)};
    }

    /// Piecewise data at nodes; a node sitting on a jump takes the average.
    static GridFunction sample(const GridPtr& grid, const Piecewise& f, int derivative = 0) {
        return sample(grid, [&](double x) { return f(x, derivative, Side::average); });
    }

    const GridPtr& grid() const noexcept { return grid_; }
    const CVec& values() const noexcept { return values_; }
    CVec& values() noexcept { return values_; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(values_.size()); }
    cplx operator[](std::size_t j) const { return values_[static_cast<Eigen::Index>(j)]; }

    GridFunction& operator+=(const GridFunction& o) {
        require_same(o);
        values_ += o.values_;
        return *this;
    }
    GridFunction& operator-=(const GridFunction& o) {
        require_same(o);
        values_ -= o.values_;
        return *this;
    }
    GridFunction& operator*=(cplx s) {
        values_ *= s;
        return *this;
    }
    friend GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
    friend GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
    friend GridFunction operator*(cplx s, GridFunction a) { return a *= s; }

    void require_same(const GridFunction& o) const {
        if (!grid_->same_as(*o.grid_)) throw ConfigError("grid mismatch");
    }

private:
    GridPtr grid_;
    CVec values_;
};

/// <f, g> = sum_j rho_j f_j conj(g_j).
inline cplx inner_product(const GridFunction& f, const GridFunction& g) {
    f.require_same(g);
    const auto& w = f.grid()->weights();
    cplx acc = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) acc += w[j] * f[j] * std::conj(g[j]);
    return acc;
}

inline double norm(const GridFunction& f) { return std::sqrt(std::max(0.0, inner_product(f, f).real())); }

/// Quadrature of f over (0, 1).
inline cplx integrate(const GridFunction& f) {
    const auto& w = f.grid()->weights();
    cplx acc = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) acc += w[j] * f[j];
    return acc;
}

} // namespace restrictlab::numgrid
