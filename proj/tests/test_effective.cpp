#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "neutral/effective.hpp"

#include "oracles.hpp"

#include <cmath>
#include <random>

using neutral::Array3;
using neutral::EllipsoidSpec;
using neutral::MaterialPair;

namespace {

std::mt19937_64 rng(11223344);

const MaterialPair<double> hs_mat = MaterialPair<double>::make(10.0, 1.0, 2.0, 1.0);

EllipsoidSpec<double> sphere_with_theta1(double theta1) {
    // r_c/r_e = theta1^{1/3}
    return EllipsoidSpec<double>::make_sphere(std::cbrt(theta1), 1.0);
}

}  // namespace

TEST_CASE("material validation") {
    CHECK_THROWS_AS(MaterialPair<double>::make(0, 1, 2, 1), std::invalid_argument);
    CHECK_THROWS_AS(MaterialPair<double>::make(1, 1, 1.0, 1), std::invalid_argument);
}

TEST_CASE("Hashin-Shtrikman sphere: sigma* = 2.8") {
    CHECK(std::abs(neutral::effective_conductivity_sphere(std::cbrt(0.5), 1.0, hs_mat) - 2.8) <=
          1e-12);
}

TEST_CASE("general path at c = (1,1,1) matches the sphere path") {
    // theta1 = 0.5: rho_e chosen so g(rho_c)/g(rho_e) = 1/2 with c = 1.
    const double rho_c = 1.0;
    const double r_c = std::sqrt(2.0);
    const double r_e = r_c * std::cbrt(2.0);
    const auto spec = EllipsoidSpec<double>::make(1, 1, 1, rho_c, r_e * r_e - 1.0);
    const double general = neutral::effective_conductivity(spec, hs_mat, 0);
    const double sphere = neutral::effective_conductivity_sphere(r_c, r_e, hs_mat);
    CHECK(std::abs(general - sphere) <= 1e-11 * sphere);
    CHECK(std::abs(general - 2.8) <= 1e-11);
}

TEST_CASE("sphere and general paths agree across a parameter sweep") {
    std::uniform_real_distribution<double> sig(0.2, 15.0), th(0.05, 0.95), pd(1.3, 3.5),
        ed(0.2, 2.5);
    for (int i = 0; i < 40; ++i) {
        const double theta1 = th(rng);
        const auto mat = MaterialPair<double>::make(sig(rng), sig(rng), pd(rng), ed(rng));
        const double r_c = std::cbrt(theta1);
        const auto spec = sphere_with_theta1(theta1);
        const double sphere = neutral::effective_conductivity_sphere(r_c, 1.0, mat);
        for (int axis = 0; axis < 3; ++axis) {
            const double general = neutral::effective_conductivity(spec, mat, axis);
            CHECK(std::abs(general - sphere) <= 1e-11 * sphere);
        }
    }
}

TEST_CASE("homogeneous materials recover the coating conductivity") {
    const auto spec = EllipsoidSpec<double>::make(1, 2, 3, 1, 4);
    const auto mat = MaterialPair<double>::make(2.0, 2.0, 2.0, 1.0);
    for (int axis = 0; axis < 3; ++axis)
        CHECK(neutral::effective_conductivity(spec, mat, axis) ==
              doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("vanishing core fraction recovers the coating conductivity") {
    // theta1 -> 0 needs g(0) -> 0, i.e. a strongly prolate family.
    const auto spec = EllipsoidSpec<double>::make(1e-3, 2.0, 3.0, 1e-6, 1.0);
    const double theta1 = neutral::volume_fraction(spec);
    CHECK(theta1 < 2e-3);
    const auto mat = MaterialPair<double>::make(10.0, 1.0, 2.0, 1.0);
    for (int axis = 0; axis < 3; ++axis) {
        const double star = neutral::effective_conductivity(spec, mat, axis);
        CHECK(std::abs(star - mat.sigma2) <= 20.0 * theta1 * mat.sigma2);
    }
}

TEST_CASE("theta1 -> 1 limit tends to the core conductivity (p = 2)") {
    const auto spec = EllipsoidSpec<double>::make(1, 2, 3, 2.0, 2.0 + 1e-9);
    const auto mat = MaterialPair<double>::make(7.0, 1.0, 2.0, 1.0);
    CHECK(neutral::effective_conductivity_p2(spec, mat, 0) ==
          doctest::Approx(7.0).epsilon(1e-6));
}

TEST_CASE("sphere theta1 -> 1 limit tends to sigma1 |E|^{p-2}") {
    const auto mat = MaterialPair<double>::make(5.0, 1.0, 3.0, 2.0);
    const double star = neutral::effective_conductivity_sphere(1.0 - 1e-7, 1.0, mat);
    CHECK(star == doctest::Approx(5.0 * 2.0).epsilon(1e-5));
}

TEST_CASE("p = 2 closed form agrees with the root-solving path") {
    std::uniform_real_distribution<double> sig(0.2, 15.0), cdist(0.4, 3.0), rdist(0.2, 4.0),
        ed(0.3, 2.0);
    for (int i = 0; i < 50; ++i) {
        const Array3<double> c(cdist(rng), cdist(rng), cdist(rng));
        const double rc = rdist(rng);
        const auto spec = EllipsoidSpec<double>::make(c, rc, rc + rdist(rng));
        const auto mat = MaterialPair<double>::make(sig(rng), sig(rng), 2.0, ed(rng));
        for (int axis = 0; axis < 3; ++axis) {
            const double closed = neutral::effective_conductivity_p2(spec, mat, axis);
            const double solved = neutral::effective_conductivity(spec, mat, axis);
            CHECK(std::abs(closed - solved) <= 1e-12 * closed);
        }
    }
    const auto spec = EllipsoidSpec<double>::make(1, 2, 3, 1, 4);
    CHECK_THROWS_AS(
        neutral::effective_conductivity_p2(spec, MaterialPair<double>::make(2, 1, 3, 1), 0),
        std::invalid_argument);
}

TEST_CASE("triaxial p = 2 effective conductivities are axis-distinct") {
    const auto spec = EllipsoidSpec<double>::make(1, 2, 3, 1, 4);
    const auto mat = MaterialPair<double>::make(5.0, 1.0, 2.0, 1.0);
    const auto result = neutral::effective_conductivity_all(spec, mat);
    CHECK(result.sigma_star[0] != result.sigma_star[1]);
    CHECK(result.sigma_star[1] != result.sigma_star[2]);
    // Larger K (shorter axis) shifts sigma* down for sigma1 > sigma2.
    for (int axis = 0; axis < 3; ++axis) {
        CHECK(result.sigma_star[axis] > mat.sigma2);
        CHECK(result.sigma_star[axis] < mat.sigma1);
    }
}

TEST_CASE("sigma* increases with theta1 for p = 2, sigma1 > sigma2") {
    const auto mat = MaterialPair<double>::make(10.0, 1.0, 2.0, 1.0);
    double prev = mat.sigma2;
    for (double theta1 = 0.1; theta1 < 0.95; theta1 += 0.1) {
        const double star =
            neutral::effective_conductivity_sphere(std::cbrt(theta1), 1.0, mat);
        CHECK(star > prev);
        prev = star;
    }
}

TEST_CASE("scale invariance across lambda") {
    const auto triaxial = EllipsoidSpec<double>::make(1, 2, 3, 1, 4);
    const auto sphere = EllipsoidSpec<double>::make_sphere(1.0, 1.6);
    const auto mat = MaterialPair<double>::make(8.0, 1.0, 2.6, 1.2);
    for (const auto& spec : {triaxial, sphere})
        for (const double lambda : {0.37, 1.0, 2.0, 10.0}) {
            const auto report = neutral::scale_invariance_check(spec, mat, lambda);
            CHECK(report.ok);
            CHECK(report.max_rel_diff <= 1e-12);
        }
}

TEST_CASE("sigma* depends on E when p differs from 2") {
    const auto mat1 = MaterialPair<double>::make(5.0, 1.0, 2.5, 1.0);
    const auto mat2 = MaterialPair<double>::make(5.0, 1.0, 2.5, 2.0);
    const double s1 = neutral::effective_conductivity_sphere(std::cbrt(0.4), 1.0, mat1);
    const double s2 = neutral::effective_conductivity_sphere(std::cbrt(0.4), 1.0, mat2);
    CHECK(s1 != s2);  // sigma* is field-dependent for p != 2

    const auto lin1 = MaterialPair<double>::make(5.0, 1.0, 2.0, 1.0);
    const auto lin2 = MaterialPair<double>::make(5.0, 1.0, 2.0, 2.0);
    CHECK(neutral::effective_conductivity_sphere(std::cbrt(0.4), 1.0, lin1) ==
          neutral::effective_conductivity_sphere(std::cbrt(0.4), 1.0, lin2));
}

TEST_CASE("coefficient chain recovers E from B2, sigma*, g(rho_e)") {
    const auto spec = EllipsoidSpec<double>::make(1, 2, 3, 1, 4);
    const auto mat = MaterialPair<double>::make(6.0, 1.5, 2.7, 1.3);
    for (int axis = 0; axis < 3; ++axis) {
        const double k = neutral::k_factor(spec, axis);
        const auto sol = neutral::solve_matching(
            neutral::MatchingProblem<double>::make(mat.sigma1, mat.sigma2, mat.E, k, mat.p));
        const double b2 = sol.x0 * neutral::g(spec, spec.rho_c) / 2.0;
        const double star = neutral::effective_conductivity(spec, mat, axis);
        const double e_back =
            2.0 * b2 * mat.sigma2 / (neutral::g(spec, spec.rho_e) * (star - mat.sigma2));
        CHECK(std::abs(e_back - mat.E) <= 1e-11 * std::abs(mat.E));
    }
}

TEST_CASE("E = 0 is rejected for p < 2 and accepted for p > 2") {
    const auto spec = EllipsoidSpec<double>::make_sphere(1.0, 2.0);
    CHECK_THROWS_AS(
        neutral::effective_conductivity(spec, MaterialPair<double>::make(5, 1, 1.5, 0.0), 0),
        std::invalid_argument);
    const double star =
        neutral::effective_conductivity(spec, MaterialPair<double>::make(5, 1, 3.0, 0.0), 0);
    CHECK(star > 0.0);
    CHECK(star < 1.0);  // zero-field core behaves as an insulator for p > 2
}
