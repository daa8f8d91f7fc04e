#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "folia/symmetry.hpp"
#include "oracles.hpp"

using namespace folia;

namespace {

TruncatedSeries coord(int d, int N, int i) { return TruncatedSeries::coordinate(d, N, i); }

FormalVectorField rot_field(int N) {
    return FormalVectorField({-1.0 * coord(2, N, 1), coord(2, N, 0)});
}

FormalVectorField euler_field(int N) {
    return FormalVectorField({coord(2, N, 0), coord(2, N, 1)});
}

TruncatedSeries r2(int N) {
    return coord(2, N, 0) * coord(2, N, 0) + coord(2, N, 1) * coord(2, N, 1);
}

FormalVectorField spiral_gen(int N) { return rot_field(N) + r2(N) * euler_field(N); }

FoliationModule circles(int N) { return FoliationModule(2, N, {rot_field(N)}); }
FoliationModule spirals(int N) { return FoliationModule(2, N, {spiral_gen(N)}); }

FoliationModule all_fields(int d, int N) {
    std::vector<FormalVectorField> gens;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            FormalVectorField g(d, N);
            g.component(i) = coord(d, N, j);
            gens.push_back(g);
        }
    return FoliationModule(d, N, std::move(gens));
}

FormalDiffeo reflection(int N) {
    Eigen::Matrix2d a;
    a << 1, 0, 0, -1;
    return FormalDiffeo::linear(a, N);
}

FormalDiffeo shear(int N) {
    Eigen::Matrix2d a;
    a << 1, 1, 0, 1;
    return FormalDiffeo::linear(a, N);
}

FormalDiffeo scaling(double c, int N) {
    return FormalDiffeo::linear(c * Eigen::Matrix2d::Identity(), N);
}

}  // namespace

TEST_CASE("is_symmetry over circles") {
    const int N = 8;
    auto F = circles(N);
    SUBCASE("rotations are symmetries") {
        CHECK(is_symmetry(F, FormalDiffeo::rotation(0.7, N)).symmetric);
    }
    SUBCASE("the reflection (x,-y) is a symmetry") {
        CHECK(is_symmetry(F, reflection(N)).symmetric);
    }
    SUBCASE("uniform scaling is a symmetry") {
        CHECK(is_symmetry(F, scaling(2.0, N)).symmetric);
    }
    SUBCASE("the shear is not, with a reported residual") {
        auto rep = is_symmetry(F, shear(N));
        CHECK(!rep.symmetric);
        bool any = false;
        for (double r : rep.forward_residuals) any = any || r > 0.0;
        for (double r : rep.inverse_residuals) any = any || r > 0.0;
        CHECK(any);
    }
    SUBCASE("the radial flow exp((x^2+y^2) E) is a symmetry") {
        CHECK(is_symmetry(F, exp_field(r2(N) * euler_field(N))).symmetric);
    }
}

TEST_CASE("is_infinitesimal_symmetry") {
    const int N = 8;
    auto F = circles(N);
    CHECK(is_infinitesimal_symmetry(F, rot_field(N)));
    CHECK(is_infinitesimal_symmetry(F, euler_field(N)));
    CHECK(is_infinitesimal_symmetry(F, r2(N) * euler_field(N)));
    // [x d/dx, rot] = y d/dx + x d/dy is not a multiple of rot
    FormalVectorField xdx(2, N);
    xdx.component(0) = coord(2, N, 0);
    CHECK(!is_infinitesimal_symmetry(F, xdx));
}

TEST_CASE("inner_certificate over circles") {
    const int N = 8;
    auto F = circles(N);

    SUBCASE("a rotation is inner via the angle family") {
        auto res = inner_certificate(F, FormalDiffeo::rotation(0.7, N));
        REQUIRE(inner_ok(res));
        auto& cert = std::get<InnerCertificate>(res);
        CHECK(cert.recomposition_error < 1e-9);
        for (const auto& z : cert.factors) CHECK(membership_ok(F.membership(z)));
    }
    SUBCASE("exp of a module element is inner") {
        auto res = inner_certificate(F, exp_field(r2(N) * rot_field(N)));
        REQUIRE(inner_ok(res));
        CHECK(std::get<InnerCertificate>(res).recomposition_error < 1e-9);
    }
    SUBCASE("the radial flow is a symmetry but not inner: obstructed at degree 3") {
        auto res = inner_certificate(F, exp_field(r2(N) * euler_field(N)));
        REQUIRE(!inner_ok(res));
        auto& f = std::get<InnerFailure>(res);
        CHECK(f.stage == InnerFailure::Stage::Residual);
        CHECK(f.degree == 3);
    }
    SUBCASE("the reflection has det < 0: linear-stage failure") {
        auto res = inner_certificate(F, reflection(N));
        REQUIRE(!inner_ok(res));
        CHECK(std::get<InnerFailure>(res).stage == InnerFailure::Stage::Linear);
    }
    SUBCASE("conjugation stability: psi exp(Z) psi^-1 is inner for a symmetry psi") {
        auto phi = exp_field(r2(N) * rot_field(N));
        auto psi = scaling(2.0, N);
        auto conj = diffeo_compose(diffeo_compose(psi, phi), diffeo_invert(psi));
        CHECK(inner_ok(inner_certificate(F, conj)));
    }
}

TEST_CASE("inner_certificate needs the nontrivial angle branch over spirals") {
    const int N = 8;
    auto F = spirals(N);
    // the time-2pi flow of the generator has identity linear part, but its log
    // is 2pi (x^2+y^2) E + ..., which is NOT in the module; the certificate
    // only exists through the theta = 2pi candidate Z = 2pi * generator.
    auto phi = exp_field(2.0 * M_PI * spiral_gen(N));
    auto res = inner_certificate(F, phi);
    REQUIRE(inner_ok(res));
    auto& cert = std::get<InnerCertificate>(res);
    CHECK(cert.recomposition_error < 1e-8);
    bool found_full_turn = false;
    for (const auto& z : cert.factors) {
        auto lp = z.linear_part();
        if (std::abs(lp[1][0] - 2.0 * M_PI) < 1e-8) found_full_turn = true;
    }
    CHECK(found_full_turn);
}

TEST_CASE("inner_certificate polar fallback on the full linear algebra") {
    const int N = 6;
    auto F = all_fields(2, N);
    SUBCASE("diag(-2,-1/2) has no single real log but is inner via polar") {
        Eigen::Matrix2d a;
        a << -2, 0, 0, -0.5;
        auto res = inner_certificate(F, FormalDiffeo::linear(a, N));
        REQUIRE(inner_ok(res));
        CHECK(std::get<InnerCertificate>(res).recomposition_error < 1e-8);
    }
    SUBCASE("det < 0 fails at the linear stage") {
        auto res = inner_certificate(F, reflection(N));
        REQUIRE(!inner_ok(res));
        auto& f = std::get<InnerFailure>(res);
        CHECK(f.stage == InnerFailure::Stage::Linear);
        CHECK(f.reason == "linear part not in exp of linear algebra");
    }
}

TEST_CASE("inner_geq_k_test") {
    const int N = 8;
    auto F = circles(N);
    SUBCASE("exp((x^2+y^2) rot) is in level 3 but not level 4") {
        auto phi = exp_field(r2(N) * rot_field(N));
        CHECK(inner_geq_k_test(F, 3, phi).inside);
        auto bad = inner_geq_k_test(F, 4, phi);
        CHECK(!bad.inside);
        CHECK(bad.obstruction_degree == 3);
    }
    SUBCASE("the radial flow fails membership at its valuation") {
        auto r = inner_geq_k_test(F, 3, exp_field(r2(N) * euler_field(N)));
        CHECK(!r.inside);
        CHECK(r.obstruction_degree == 3);
        CHECK(r.obstruction.max_abs() > 1e-6);
    }
    SUBCASE("identity is in every level") {
        CHECK(inner_geq_k_test(F, 5, FormalDiffeo::identity(2, N)).inside);
    }
    SUBCASE("non tangent-to-identity input is rejected") {
        CHECK_THROWS_AS(inner_geq_k_test(F, 2, FormalDiffeo::rotation(0.3, N)),
                        std::invalid_argument);
    }
}

TEST_CASE("out_class_invariant over circles with invariant x^2+y^2") {
    const int N = 8;
    auto F = circles(N);
    auto inv = r2(N);

    SUBCASE("rotation: g = t, sign +1") {
        auto oc = out_class_invariant(F, inv, FormalDiffeo::rotation(1.1, N));
        CHECK(oc.sign == 1);
        CHECK(oc.g.coeffs[0] == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(oc.g.coeffs[1] == doctest::Approx(1.0).epsilon(1e-10));
        for (size_t i = 2; i < oc.g.coeffs.size(); ++i)
            CHECK(std::abs(oc.g.coeffs[i]) < 1e-9);
    }
    SUBCASE("scaling by 2: g = 4t") {
        auto oc = out_class_invariant(F, inv, scaling(2.0, N));
        CHECK(oc.g.coeffs[1] == doctest::Approx(4.0).epsilon(1e-10));
    }
    SUBCASE("reflection: g = t, sign -1") {
        auto oc = out_class_invariant(F, inv, reflection(N));
        CHECK(oc.sign == -1);
        CHECK(oc.g.coeffs[1] == doctest::Approx(1.0).epsilon(1e-10));
    }
    SUBCASE("radial flow: g = t/(1-2t) = t + 2t^2 + 4t^3 + ...") {
        // time-1 flow of r' = r^3 sends r to r (1 - 2 r^2)^{-1/2}
        auto oc = out_class_invariant(F, inv, exp_field(inv * euler_field(N)));
        for (int n = 1; n < static_cast<int>(oc.g.coeffs.size()); ++n)
            CHECK(oc.g.coeffs[n] == doctest::Approx(std::pow(2.0, n - 1)).epsilon(1e-7));
    }
    SUBCASE("multiplicativity: g_{phi o psi} = g_phi o g_psi") {
        auto phi = exp_field(inv * euler_field(N));
        auto psi = scaling(2.0, N);
        auto lhs = out_class_invariant(F, inv, diffeo_compose(phi, psi)).g;
        auto rhs = scalar_jet_compose(out_class_invariant(F, inv, phi).g,
                                      out_class_invariant(F, inv, psi).g);
        for (size_t n = 0; n < lhs.coeffs.size() && n < rhs.coeffs.size(); ++n)
            CHECK(lhs.coeffs[n] == doctest::Approx(rhs.coeffs[n]).epsilon(1e-8));
    }
    SUBCASE("non-invariant input is rejected") {
        auto G = all_fields(2, N);
        CHECK_THROWS_AS(out_class_invariant(G, inv, FormalDiffeo::identity(2, N)),
                        std::invalid_argument);
    }
    SUBCASE("a non-symmetry whose pullback is not a function of the invariant") {
        CHECK_THROWS_AS(out_class_invariant(F, inv, shear(N)), std::runtime_error);
    }
}

TEST_CASE("winding_number") {
    const int N = 4;
    auto F = circles(N);
    auto loop = [&](int n, int samples) {
        std::vector<FormalDiffeo> path;
        for (int i = 0; i <= samples; ++i)
            path.push_back(FormalDiffeo::rotation(2.0 * M_PI * n * i / samples, N));
        return path;
    };
    SUBCASE("kappa_n has winding n") {
        for (int n = -2; n <= 2; ++n) CHECK(winding_number(F, loop(n, 64)) == n);
    }
    SUBCASE("too-coarse sampling is rejected") {
        CHECK_THROWS_AS(winding_number(F, loop(1, 3)), std::invalid_argument);
    }
    SUBCASE("non-closing paths are rejected") {
        std::vector<FormalDiffeo> path;
        for (int i = 0; i <= 16; ++i)
            path.push_back(FormalDiffeo::rotation(M_PI * i / 16.0, N));
        CHECK_THROWS_AS(winding_number(F, path), std::invalid_argument);
    }
    SUBCASE("unsupported linear algebra is rejected") {
        auto G = all_fields(2, N);
        CHECK_THROWS_AS(winding_number(G, loop(1, 64)), std::invalid_argument);
    }
}
