#pragma once

#include "restrictlab/errors.hpp"
#include "restrictlab/numgrid/chebyshev.hpp"

#include <algorithm>
#include <functional>
#include <span>
#include <vector>

namespace restrictlab::numgrid {

/// Which one-sided limit to take when evaluating exactly at a breakpoint.
enum class Side { left, right, average };

/**
 * Piecewise polynomial on [0, 1].
 *
 * Each piece [b_p, b_{p+1}] stores a Chebyshev series in the local variable
 * t = (2x - b_p - b_{p+1}) / (b_{p+1} - b_p). Discontinuities are allowed at
 * interior breakpoints; evaluation there picks a side (average gives the
 * midpoint convention, e.g. sign(0) = 0).
 */
class Piecewise {
public:
    Piecewise() : breaks_{0.0, 1.0}, pieces_{CVec::Zero(1)} {}

    Piecewise(std::vector<double> breaks, std::vector<CVec> pieces)
        : breaks_(std::move(breaks)), pieces_(std::move(pieces)) {
        if (breaks_.size() < 2 || pieces_.size() + 1 != breaks_.size()) {
            throw ConfigError("piecewise: breakpoint/piece count mismatch");
        }
        if (breaks_.front() != 0.0 || breaks_.back() != 1.0) {
            throw ConfigError("piecewise: breakpoints must start at 0 and end at 1");
        }
        for (std::size_t i = 0; i + 1 < breaks_.size(); ++i) {
            if (!(breaks_[i] < breaks_[i + 1])) throw ConfigError("piecewise: breakpoints must increase");
        }
    }

    static Piecewise constant(cplx c) {
        CVec v(1);
        v[0] = c;
        return Piecewise({0.0, 1.0}, {v});
    }

    /// Chebyshev coefficients of the degree-d interpolant of f on [a, b].
    static CVec fit_piece(double a, double b, std::size_t degree, const std::function<cplx(double)>& f) {
        const std::size_t m = degree + 1;
        std::vector<double> t(m);
        for (std::size_t k = 0; k < m; ++k) t[k] = -std::cos(std::numbers::pi * (2.0 * k + 1.0) / (2.0 * m));
        const Eigen::PartialPivLU<Eigen::MatrixXd> lu(chebyshev_vandermonde(t, m));
        CVec vals(static_cast<Eigen::Index>(m));
        for (std::size_t k = 0; k < m; ++k) vals[static_cast<Eigen::Index>(k)] = f(0.5 * (a + b) + 0.5 * (b - a) * t[k]);
        CVec c(static_cast<Eigen::Index>(m));
        c.real() = lu.solve(vals.real().eval());
        c.imag() = lu.solve(vals.imag().eval());
        return c;
    }

    /// Sample an arbitrary per-piece callable exactly up to the given degree.
    static Piecewise from_callable(std::vector<double> breaks, std::size_t degree,
                                   const std::function<cplx(std::size_t piece, double x)>& f) {
        std::vector<CVec> pieces;
        for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
            pieces.push_back(fit_piece(breaks[p], breaks[p + 1], degree, [&](double x) { return f(p, x); }));
        }
        return Piecewise(std::move(breaks), std::move(pieces));
    }

    /// Piecewise polynomial from monomial coefficients in x, one list per piece.
    static Piecewise from_monomials(std::vector<double> breaks, const std::vector<std::vector<cplx>>& coeffs) {
        if (coeffs.size() + 1 != breaks.size()) throw ConfigError("piecewise: one coefficient list per piece required");
        std::size_t degree = 0;
        for (const auto& c : coeffs) degree = std::max<std::size_t>(degree, c.empty() ? 0 : c.size() - 1);
        return from_callable(std::move(breaks), degree, [&](std::size_t p, double x) {
            cplx acc = 0.0;
            for (auto it = coeffs[p].rbegin(); it != coeffs[p].rend(); ++it) acc = acc * x + *it;
            return acc;
        });
    }

    /// Global polynomial sum_k c_k x^k.
    static Piecewise polynomial(const std::vector<cplx>& monomial) {
        return from_monomials({0.0, 1.0}, {monomial});
    }

    const std::vector<double>& breaks() const noexcept { return breaks_; }
    const std::vector<CVec>& pieces() const noexcept { return pieces_; }
    std::size_t piece_count() const noexcept { return pieces_.size(); }

    std::vector<double> interior_breaks() const {
        return {breaks_.begin() + 1, breaks_.end() - 1};
    }

    /// Index of the piece containing x, choosing by side at a breakpoint.
    std::size_t locate(double x, Side side) const {
        const auto it = std::upper_bound(breaks_.begin(), breaks_.end(), x);
        std::size_t p = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - breaks_.begin()) - 1));
        p = std::min(p, pieces_.size() - 1);
        if (side == Side::left && p > 0 && x == breaks_[p]) --p;
        return p;
    }

    cplx eval_piece(std::size_t p, double x, int derivative = 0) const {
        const double a = breaks_[p], b = breaks_[p + 1];
        CVec c = pieces_[p];
        for (int k = 0; k < derivative; ++k) c = chebyshev_derivative(c) * (2.0 / (b - a));
        return chebyshev_eval(c, (2.0 * x - a - b) / (b - a));
    }

    cplx operator()(double x, int derivative = 0, Side side = Side::average) const {
        const bool on_break = std::find(breaks_.begin() + 1, breaks_.end() - 1, x) != breaks_.end() - 1;
        if (side == Side::average && on_break) {
            return 0.5 * (eval_piece(locate(x, Side::left), x, derivative) +
                          eval_piece(locate(x, Side::right), x, derivative));
        }
        return eval_piece(locate(x, side == Side::average ? Side::right : side), x, derivative);
    }

    /// Right limit minus left limit of the given derivative at x.
    cplx jump(double x, int derivative = 0) const {
        return (*this)(x, derivative, Side::right) - (*this)(x, derivative, Side::left);
    }

    Piecewise derivative() const {
        std::vector<CVec> out;
        for (std::size_t p = 0; p < pieces_.size(); ++p) {
            out.push_back(chebyshev_derivative(pieces_[p]) * (2.0 / (breaks_[p + 1] - breaks_[p])));
        }
        return Piecewise(breaks_, std::move(out));
    }

    /// Continuous antiderivative F with F(0) = 0.
    Piecewise antiderivative() const {
        std::vector<CVec> out;
        cplx carry = 0.0;
        for (std::size_t p = 0; p < pieces_.size(); ++p) {
            CVec c = chebyshev_integral(pieces_[p]) * (0.5 * (breaks_[p + 1] - breaks_[p]));
            c[0] += carry;
            carry = chebyshev_eval(c, 1.0);
            out.push_back(std::move(c));
        }
        return Piecewise(breaks_, std::move(out));
    }

    /// Integral over [0, 1].
    cplx integral() const { return antiderivative()(1.0, 0, Side::left); }

    /// Re-express on a refined breakpoint set (must contain all current breaks).
    Piecewise refined(const std::vector<double>& breaks) const {
        if (breaks == breaks_) return *this;
        std::vector<CVec> out;
        for (std::size_t q = 0; q + 1 < breaks.size(); ++q) {
            const double a = breaks[q], b = breaks[q + 1];
            const std::size_t p = locate(0.5 * (a + b), Side::right);
            if (breaks_[p] == a && breaks_[p + 1] == b) {
                out.push_back(pieces_[p]);
                continue;
            }
            const auto degree = static_cast<std::size_t>(pieces_[p].size()) - 1;
            out.push_back(fit_piece(a, b, degree, [&](double x) { return eval_piece(p, x); }));
        }
        return Piecewise(breaks, std::move(out));
    }

    Piecewise& operator*=(cplx s) {
        for (auto& c : pieces_) c *= s;
        return *this;
    }

    friend Piecewise operator*(cplx s, Piecewise f) { return f *= s; }

    friend Piecewise operator+(const Piecewise& f, const Piecewise& g) { return combine(f, g, 1.0); }
    friend Piecewise operator-(const Piecewise& f, const Piecewise& g) { return combine(f, g, -1.0); }

private:
    static std::vector<double> merged_breaks(const Piecewise& f, const Piecewise& g) {
        std::vector<double> b;
        std::set_union(f.breaks_.begin(), f.breaks_.end(), g.breaks_.begin(), g.breaks_.end(), std::back_inserter(b));
        b.erase(std::unique(b.begin(), b.end()), b.end());
        return b;
    }

    static Piecewise combine(const Piecewise& f, const Piecewise& g, double sign) {
        if (f.breaks_ == g.breaks_) {
            std::vector<CVec> out;
            for (std::size_t p = 0; p < f.pieces_.size(); ++p) {
                const auto& a = f.pieces_[p];
                const auto& b = g.pieces_[p];
                CVec c = CVec::Zero(std::max(a.size(), b.size()));
                c.head(a.size()) += a;
                c.head(b.size()) += sign * b;
                out.push_back(std::move(c));
            }
            return Piecewise(f.breaks_, std::move(out));
        }
        const auto b = merged_breaks(f, g);
        return combine(f.refined(b), g.refined(b), sign);
    }

    std::vector<double> breaks_;
    std::vector<CVec> pieces_;
};

} // namespace restrictlab::numgrid
