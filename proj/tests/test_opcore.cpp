#include "catch_amalgamated.hpp"

#include "restrictlab/diffop/fixed.hpp"
#include "restrictlab/opcore/operator.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace restrictlab;
using namespace restrictlab::numgrid;
using namespace restrictlab::opcore;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace {
constexpr double pi = std::numbers::pi;

GridFunction random_function(const GridPtr& g, std::mt19937& rng) {
    std::normal_distribution<double> d;
    CVec v(static_cast<Eigen::Index>(g->size()));
    for (auto& x : v) x = cplx(d(rng), d(rng));
    return {g, v};
}

OperatorMatrix random_operator(const GridPtr& g, std::mt19937& rng) {
    std::normal_distribution<double> d;
    const auto n = static_cast<Eigen::Index>(g->size());
    CMat m(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) m(i, j) = cplx(d(rng), d(rng));
    return {g, m};
}

OperatorMatrix diagonal(const GridPtr& g, auto&& f) {
    const auto n = static_cast<Eigen::Index>(g->size());
    CMat m = CMat::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) m(j, j) = f(g->nodes()[static_cast<std::size_t>(j)]);
    return {g, m};
}
} // namespace

TEST_CASE("operator shape and role naming") {
    const auto g = build_grid(Scheme::collocation, 16);
    CHECK_THROWS_WITH(OperatorMatrix(g, CMat::Zero(3, 3)), ContainsSubstring("grid has 16 nodes"));
    const OperatorMatrix a(g, CMat::Identity(16, 16), Role::L_K_inverse);
    CHECK(a.name() == "L_K_inverse");
    CHECK(adjoint(a).name() == "adjoint-of-L_K_inverse");
    CHECK(adjoint(adjoint(a)).name() == "L_K_inverse");
    const auto other = build_grid(Scheme::uniform, 16);
    CHECK_THROWS_WITH(a + OperatorMatrix::identity(other), ContainsSubstring("grid mismatch"));
}

TEST_CASE("weighted adjoint satisfies the pairing identity") {
    std::mt19937 rng(7);
    for (Scheme s : {Scheme::uniform, Scheme::collocation}) {
        const auto g = build_grid(s, 40, std::vector<double>{0.3});
        const OperatorMatrix a = random_operator(g, rng);
        const OperatorMatrix as = adjoint(a);
        const double na = operator_norm(a);
        for (int t = 0; t < 10; ++t) {
            const auto f = random_function(g, rng);
            const auto h = random_function(g, rng);
            const double r = std::abs(inner_product(a(f), h) - inner_product(f, as(h)));
            CHECK(r <= 1e-10 * na * norm(f) * norm(h));
        }
        CHECK((adjoint(as).matrix() - a.matrix()).norm() <= 1e-13 * a.matrix().norm());
    }
}

TEST_CASE("adjoint of simple operators") {
    const auto g = build_grid(Scheme::collocation, 32);
    CHECK((adjoint(OperatorMatrix::identity(g)).matrix() - CMat::Identity(32, 32)).cwiseAbs().maxCoeff() <= 1e-15);
    const auto x = diagonal(g, [](double t) { return t; });
    CHECK((adjoint(x).matrix() - x.matrix()).cwiseAbs().maxCoeff() <= 1e-13);
}

TEST_CASE("composition is associative within roundoff") {
    std::mt19937 rng(3);
    const auto g = build_grid(Scheme::uniform, 30);
    const auto a = random_operator(g, rng), b = random_operator(g, rng), c = random_operator(g, rng);
    const double bound = 1e-11 * operator_norm(a) * operator_norm(b) * operator_norm(c);
    CHECK(operator_norm((a * b) * c - a * (b * c)) <= bound);
}

TEST_CASE("smallest singular value") {
    const auto g = build_grid(Scheme::uniform, 12);
    CHECK_THAT(min_singular_value(OperatorMatrix::identity(g)), WithinAbs(1.0, 1e-14));
    CHECK(min_singular_value(OperatorMatrix::zero(g)) == 0.0);
    const auto d = diagonal(g, [](double t) { return t < 0.3 ? 1.0 : (t < 0.6 ? 0.5 : 2.0); });
    CHECK_THAT(min_singular_value(d), WithinAbs(0.5, 1e-13));
}

TEST_CASE("solve") {
    const auto g = build_grid(Scheme::collocation, 24);
    const auto f = GridFunction::sample(g, [](double x) { return std::exp(x); });
    CHECK((solve(OperatorMatrix::identity(g), f).values() - f.values()).norm() == 0.0);
    const auto half = solve(cplx(2.0) * OperatorMatrix::identity(g), GridFunction::sample(g, [](double) { return 1.0; }));
    CHECK((half.values().array() - 0.5).abs().maxCoeff() <= 1e-15);

    SECTION("singular operator reports its smallest singular value") {
        try {
            solve(OperatorMatrix::zero(g), f);
            FAIL("expected NumericalError");
        } catch (const NumericalError& e) {
            CHECK(e.smallest_singular_value() == 0.0);
        }
    }

    SECTION("discrete Dirichlet problem") {
        const auto h = build_grid(Scheme::collocation, 64);
        const auto fx = diffop::fixed_L(2, diffop::BoundaryChoice::dirichlet_n2, h);
        const auto rhs = GridFunction::sample(h, [](double x) { return pi * pi * std::sin(pi * x); });
        const auto u = solve(fx.L, rhs);
        double err = 0.0;
        for (std::size_t j = 0; j < h->size(); ++j) err = std::max(err, std::abs(u[j] - std::sin(pi * h->nodes()[j])));
        CHECK(err <= 1e-8);
        const double res = norm(fx.L(u) - rhs);
        CHECK(res <= 1e-10 * operator_norm(fx.L) * norm(u));
    }
}

TEST_CASE("rank-n operator assembly") {
    const auto g = build_grid(Scheme::collocation, 48, std::vector<double>{0.25, 0.75});
    const auto one = GridFunction::sample(g, [](double) { return 1.0; });
    const auto x = GridFunction::sample(g, [](double t) { return t; });
    const auto zero = GridFunction::zero(g);

    SECTION("zero densities give the zero matrix") {
        const auto k = assemble_rank_n({one, x}, {zero, zero});
        CHECK(k.matrix().matrix().norm() == 0.0);
    }
    SECTION("K f = integral of f") {
        const auto k = assemble_rank_n({one}, {one});
        const auto r = k.matrix()(one);
        CHECK((r.values().array() - 1.0).abs().maxCoeff() <= 1e-12);
    }
    SECTION("two-direction K against direct quadrature") {
        const auto w1 = GridFunction::sample(g, [](double t) { return 1.0 - t; });
        const auto s1 = GridFunction::sample(g, [](double t) { return t < 0.25 ? 0.0 : (t < 0.75 ? cplx(t * t, t) : 0.0); });
        const auto s2 = GridFunction::sample(g, [](double t) { return std::cos(3.0 * t); });
        const auto k = assemble_rank_n({w1, x}, {s1, s2});
        const auto f = GridFunction::sample(g, [](double t) { return std::sin(pi * t); });
        cplx a1 = 0.0, a2 = 0.0;
        for (std::size_t m = 0; m < g->size(); ++m) {
            a1 += g->weights()[m] * f[m] * std::conj(s1[m]);
            a2 += g->weights()[m] * f[m] * std::conj(s2[m]);
        }
        const auto kf = k.matrix()(f);
        double err = 0.0;
        for (std::size_t j = 0; j < g->size(); ++j) err = std::max(err, std::abs(kf[j] - (w1[j] * a1 + x[j] * a2)));
        CHECK(err <= 1e-12);
        CHECK((k.apply(f).values() - kf.values()).norm() <= 1e-12);

        const auto ks = opcore::adjoint(k);
        const auto swapped = assemble_rank_n({s1, s2}, {w1, x});
        CHECK((ks.matrix().matrix() - swapped.matrix().matrix()).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((opcore::adjoint(k.matrix()).matrix() - ks.matrix().matrix()).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK(ks.matrix().name() == "adjoint-of-K");
    }
    SECTION("range lies in polynomials of degree < n") {
        const auto s = GridFunction::sample(g, [](double t) { return std::exp(t); });
        const auto k = assemble_rank_n({one, x}, {s, s});
        const auto kf = k.apply(GridFunction::sample(g, [](double t) { return t * t; }));
        CHECK(differentiate(kf, 2).values().cwiseAbs().maxCoeff() <= 1e-8);
    }
    SECTION("mismatched inputs") {
        CHECK_THROWS_WITH(assemble_rank_n({one, x}, {one}), ContainsSubstring("2 directions but 1 densities"));
        const auto other = GridFunction::sample(build_grid(Scheme::uniform, 48), [](double) { return 1.0; });
        CHECK_THROWS_WITH(assemble_rank_n({one}, {other}), ContainsSubstring("grid mismatch"));
        CHECK_THROWS_AS(assemble_rank_n({}, {}), ConfigError);
    }
}
