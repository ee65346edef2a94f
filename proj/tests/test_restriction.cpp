#include "catch_amalgamated.hpp"

#include "restrictlab/restriction/bundle.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace restrictlab;
using namespace restrictlab::numgrid;
using namespace restrictlab::restriction;
using diffop::BoundaryChoice;
using opcore::OperatorMatrix;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
constexpr double pi = std::numbers::pi;

GridFunction random_function(const GridPtr& g, std::mt19937& rng) {
    std::normal_distribution<double> d;
    CVec v(static_cast<Eigen::Index>(g->size()));
    for (auto& x : v) x = cplx(d(rng), d(rng));
    return {g, v};
}

// Smallest singular value of (I + KL)* on a trapezoid grid, with KL taken as
// s(-1)^n sum_i w_i <., sigma_i^(n)>, which needs only samples and quadrature.
double uniform_density_oracle(const diffop::RestrictionSpec& spec, std::size_t n) {
    const auto g = build_grid(Scheme::uniform, n);
    const auto ws = diffop::kernel_basis(spec.order, spec.fixed, g);
    const auto sn = diffop::sigma_n_samples(spec, g);
    const auto sz = static_cast<Eigen::Index>(n);
    CMat p = CMat::Identity(sz, sz);
    for (std::size_t i = 0; i < ws.size(); ++i)
        for (Eigen::Index r = 0; r < sz; ++r)
            for (Eigen::Index c = 0; c < sz; ++c)
                p(r, c) += diffop::adjoint_factor(spec) * ws[i].values()[r] * g->weights()[static_cast<std::size_t>(c)] *
                           std::conj(sn[i].values()[c]);
    Eigen::VectorXd d(sz);
    for (Eigen::Index j = 0; j < sz; ++j) d[j] = std::sqrt(g->weights()[static_cast<std::size_t>(j)]);
    const CMat wp = d.asDiagonal() * p * d.cwiseInverse().asDiagonal();
    return Eigen::BDCSVD<CMat>(wp.adjoint()).singularValues().minCoeff();
}
} // namespace

TEST_CASE("restricted inverse") {
    const auto spec = diffop::sign_case_n2(0.25, 0.75);
    const auto g = spec.make_grid(Scheme::collocation, 96);
    const auto f = diffop::fixed_L(spec, g);

    SECTION("zero kernel leaves L^{-1} unchanged") {
        const auto z = diffop::zero_spec(2, BoundaryChoice::dirichlet_n2);
        const auto k = assemble_K(z, g);
        const auto lk = restriction_inverse(f.L_inverse, k);
        CHECK((lk.matrix() - f.L_inverse.matrix()).norm() == 0.0);
        CHECK(lk.name() == "L_K_inverse");
    }
    SECTION("L_K^{-1} - L^{-1} maps into the kernel of d^2") {
        std::mt19937 rng(2);
        const auto lk = restriction_inverse(f.L_inverse, assemble_K(spec, g));
        for (int t = 0; t < 5; ++t) {
            const auto r = random_function(g, rng);
            const auto diff = lk(r) - f.L_inverse(r);
            CHECK(differentiate(diff, 2).values().cwiseAbs().maxCoeff() <= 1e-8 * std::max(1.0, norm(diff)));
        }
    }
    SECTION("L_K^{-1} 1 against the closed form") {
        const double x1 = 0.25, x2 = 0.75;
        const double u = x2 - x1, q2 = x2 * x2 - x1 * x1, q3 = x2 * x2 * x2 - x1 * x1 * x1;
        const double s1p0 = -(2.0 * u - q2), s2p0 = -(q2 - 2.0 * q3 / 3.0);
        const double int_s1 = s1p0 / 2.0 + (std::pow(1.0 - x1, 3) - std::pow(1.0 - x2, 3)) / 3.0;
        auto mom = [](double t) { return t * t / 2.0 - 2.0 * t * t * t / 3.0 + t * t * t * t / 4.0; };
        const double int_s2 = s2p0 / 2.0 + mom(x2) - mom(x1);
        const auto lk = restriction_inverse(f.L_inverse, assemble_K(spec, g));
        const auto r = lk(GridFunction::sample(g, [](double) { return 1.0; }));
        double err = 0.0;
        for (std::size_t j = 0; j < g->size(); ++j) {
            const double x = g->nodes()[j];
            err = std::max(err, std::abs(r[j] - (-x * x / 2.0 + x / 2.0 + (1.0 - x) * int_s1 + x * int_s2)));
        }
        CHECK(err <= 1e-10);
    }
    SECTION("grid mismatch") {
        const auto other = spec.make_grid(Scheme::collocation, 48);
        CHECK_THROWS_WITH(restriction_inverse(f.L_inverse, assemble_K(spec, other)), ContainsSubstring("grid mismatch"));
    }
}

TEST_CASE("density check") {
    SECTION("zero kernel") {
        const auto z = diffop::zero_spec(2, BoundaryChoice::dirichlet_n2);
        const auto g = build_grid(Scheme::collocation, 32);
        const auto r = density_check(diffop::fixed_L(z, g).L, assemble_K(z, g));
        CHECK(r.dense);
        CHECK_THAT(r.smin, WithinAbs(1.0, 1e-12));
    }
    SECTION("sign case matches the uniform-grid brute force") {
        const auto spec = diffop::sign_case_n2(0.25, 0.75);
        const auto g = spec.make_grid(Scheme::collocation, 128);
        const auto r = density_check(diffop::fixed_L(spec, g).L, assemble_K(spec, g));
        CHECK(r.dense);
        const double oracle = uniform_density_oracle(spec, 257);
        CHECK_THAT(r.smin, WithinRel(oracle, 0.05));
        CHECK(std::abs(diffop::build_U(spec).det) > 0.0);
    }
    SECTION("engineered degenerate kernel") {
        const auto spec = diffop::degenerate_n2();
        for (std::size_t n : {64, 128, 256}) {
            const auto g = spec.make_grid(Scheme::collocation, n);
            const auto r = density_check(diffop::fixed_L(spec, g).L, assemble_K(spec, g));
            CHECK_FALSE(r.dense);
            CHECK(r.smin <= 1e-10 * r.norm);
        }
        CHECK(diffop::build_U(spec).degenerate);
        CHECK(uniform_density_oracle(spec, 257) <= 1e-10);
        const auto g = spec.make_grid(Scheme::collocation, 64);
        CHECK_THROWS_WITH(build_bundle(spec, g), ContainsSubstring("L_K not densely defined (det U ≈ 0)"));
        try {
            build_bundle(spec, g);
        } catch (const DegenerateError& e) {
            CHECK(e.measure() <= 1e-10);
        }
    }
}

TEST_CASE("similar operator bundle") {
    SECTION("zero kernel gives A_K = L") {
        const auto z = diffop::zero_spec(2, BoundaryChoice::dirichlet_n2);
        const auto g = build_grid(Scheme::collocation, 48);
        const auto b = build_bundle(z, g);
        CHECK((b.A_K.matrix() - b.L.matrix()).norm() == 0.0);
        CHECK((build_adjoint_similar(b).matrix() - opcore::adjoint(b.L).matrix()).norm() == 0.0);
        CHECK(b.A_K.name() == "A_K");
        CHECK(build_adjoint_similar(b).name() == "adjoint-of-A_K");
    }

    const auto spec = diffop::sign_case_n2(0.25, 0.75);
    const auto g = spec.make_grid(Scheme::collocation, 128);
    const auto b = build_bundle(spec, g);
    const auto I = OperatorMatrix::identity(g);

    SECTION("stored invariants") {
        CHECK((b.L_K_inverse.matrix() - (b.L_inverse.matrix() + b.K.matrix().matrix())).norm() == 0.0);
        CHECK(b.density_flag);
        CHECK(relative_distance(b.A_K_inverse, b.L_inverse * b.P(), opcore::operator_norm(b.A_K_inverse)) <= 1e-12);
        CHECK(opcore::operator_norm(b.A_K * b.A_K_inverse - I) <= 1e-9);
    }
    SECTION("inverse identities") {
        const auto r = identity_residuals(b);
        CHECK(r.neumann_left <= 1e-10);
        CHECK(r.neumann_right <= 1e-10);
        CHECK(r.inverse_chain <= 1e-10);
        CHECK(r.lk_inverse_sum <= 1e-15);
        // independent chain: A_K^{-1} = P^{-1} L_K^{-1} P with P inverted by a fresh solve
        const CMat pinv = b.P().matrix().fullPivLu().inverse();
        const CMat chain = pinv * b.L_K_inverse.matrix() * b.P().matrix();
        CHECK(opcore::operator_norm(OperatorMatrix(g, chain) - b.A_K_inverse) <= 1e-10 * opcore::operator_norm(b.A_K_inverse));
    }
    SECTION("adjoint pairing") {
        std::mt19937 rng(17);
        const auto as = build_adjoint_similar(b);
        for (int t = 0; t < 20; ++t) {
            // f in D(L): Dirichlet antiderivative of a random smooth right-hand side; w arbitrary
            const auto f = b.L_inverse(GridFunction::sample(g, [&, c = random_function(g, rng)[0]](double x) {
                return c * std::exp(x) + std::sin(3.0 * x);
            }));
            const auto w = b.L_inverse(random_function(g, rng));
            const double r = std::abs(inner_product(b.A_K(f), w) - inner_product(f, as(w)));
            CHECK(r <= 1e-9 * norm(b.A_K(f)) * norm(w) + 1e-9 * norm(f) * norm(as(w)));
        }
    }
    SECTION("domain containment proxy") {
        CHECK(domain_containment_angle(b, spec) <= 1e-8);
    }
    SECTION("classical adjoint inverse agrees with the weighted adjoint") {
        const auto classical = adjoint_inverse_classical(b, spec);
        const auto weighted = opcore::adjoint(b.A_K_inverse);
        CHECK(relative_distance(classical, weighted, opcore::operator_norm(weighted)) <= 1e-8);
    }
}

TEST_CASE("boundedness probe") {
    const std::vector<std::size_t> sizes{64, 128, 256};
    SECTION("zero kernel") {
        const auto r = kl_probe(diffop::zero_spec(2, BoundaryChoice::dirichlet_n2), Scheme::collocation, sizes);
        for (double v : r.norms) CHECK(v == 0.0);
        CHECK(r.verdict == "bounded");
    }
    SECTION("admissible kernel") {
        const auto r = kl_probe(diffop::sign_case_n2(0.25, 0.75), Scheme::collocation, sizes);
        const auto [lo, hi] = std::minmax_element(r.norms.begin(), r.norms.end());
        CHECK(*hi / *lo < 1.2);
        CHECK(r.verdict == "bounded");
    }
    SECTION("kernel outside D(L*)") {
        const auto bad = diffop::sign_case_n2(0.25, 0.75, {{1.0, 0.0}, {0.0, 0.0}});
        CHECK_FALSE(bad.admissible());
        const auto r = kl_probe(bad, Scheme::collocation, sizes);
        CHECK(r.norms.back() / r.norms.front() > 2.0);
        CHECK(r.verdict == "unbounded");
    }
    CHECK_THROWS_AS(kl_probe(diffop::sign_case_n2(0.25, 0.75), Scheme::collocation, {}), ConfigError);
}
