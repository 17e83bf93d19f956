#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "neutral/verifier.hpp"

#include "neutral/effective.hpp"

#include <cmath>
#include <numbers>

using neutral::EllipsoidSpec;
using neutral::Grid;
using neutral::MaterialPair;
using neutral::Vector3;

namespace {

// Coated sphere with theta1 = 0.5 embedded at its neutral sigma*.
struct SphereCase {
    EllipsoidSpec<double> spec;
    MaterialPair<double> mat;
    double sigma_star;
    double r_e = 1.0;
};

SphereCase hs_case(double p = 2.0) {
    SphereCase c{EllipsoidSpec<double>::make_sphere(std::cbrt(0.5), 1.0),
                 MaterialPair<double>::make(10.0, 1.0, p, 1.0), 0.0};
    c.sigma_star = neutral::effective_conductivity_sphere(std::cbrt(0.5), 1.0, c.mat);
    return c;
}

}  // namespace

TEST_CASE("grid validation") {
    CHECK_THROWS_AS(Grid::make(8, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(Grid::make(17, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(Grid::make(32, 0.0), std::invalid_argument);
    const auto grid = Grid::make(32, 2.0);
    CHECK(grid.spacing() == doctest::Approx(0.125));
}

TEST_CASE("rasterized volumes track the analytic ones at n = 64") {
    const auto c = hs_case();
    const auto grid = Grid::make(64, 2.0 * c.r_e);
    const auto field = neutral::rasterize(c.spec, c.mat, c.sigma_star, grid, 3);

    const double cell_vol = std::pow(grid.spacing(), 3);
    const double vol_core = field.frac_core.sum() * cell_vol;
    const double vol_coat = field.frac_coat.sum() * cell_vol;
    const double r_c = std::cbrt(0.5);
    const double exact_core = 4.0 / 3.0 * std::numbers::pi * r_c * r_c * r_c;
    const double exact_total = 4.0 / 3.0 * std::numbers::pi;
    CHECK(std::abs(vol_core - exact_core) <= 0.02 * exact_core);
    CHECK(std::abs(vol_core + vol_coat - exact_total) <= 0.02 * exact_total);

    // theta1 from the rasterized volumes.
    const double theta1_raster = vol_core / (vol_core + vol_coat);
    CHECK(std::abs(theta1_raster - 0.5) <= 0.02);
}

TEST_CASE("clearance violations are rejected") {
    const auto c = hs_case();
    CHECK_THROWS_AS(neutral::rasterize(c.spec, c.mat, c.sigma_star, Grid::make(16, 1.05), 2),
                    std::invalid_argument);
}

TEST_CASE("a tiny inclusion rasterizes to a uniform matrix field") {
    const auto spec = EllipsoidSpec<double>::make_sphere(0.0005, 0.001);
    const auto mat = MaterialPair<double>::make(10.0, 1.0, 2.0, 1.0);
    const auto grid = Grid::make(16, 2.0);
    const auto field = neutral::rasterize(spec, mat, 3.0, grid, 1);
    CHECK(field.frac_core.sum() == 0.0);
    CHECK(field.frac_coat.sum() == 0.0);
}

TEST_CASE("homogeneous medium reproduces the linear field exactly") {
    const auto spec = EllipsoidSpec<double>::make_sphere(0.0005, 0.001);
    for (const double p : {2.0, 2.5}) {
        const auto mat = MaterialPair<double>::make(3.0, 3.0, p, 1.0);
        const auto grid = Grid::make(16, 1.0);
        auto field = neutral::rasterize(spec, mat, 3.0, grid, 1);
        const auto sol = neutral::solve_cell(field, mat.E, 0);
        CHECK(sol.converged);
        double worst = 0;
        for (int k = 0; k < grid.n; ++k)
            for (int j = 0; j < grid.n; ++j)
                for (int i = 0; i < grid.n; ++i)
                    worst = std::max(worst, std::abs(sol.u[grid.index(i, j, k)] -
                                                     mat.E * grid.coord(i)));
        CHECK(worst < 1e-9);

        const auto metrics = neutral::exterior_uniformity(sol, spec, grid, mat.E, 0);
        CHECK(metrics.max_u_dev < 1e-9);
        CHECK(metrics.max_grad_dev < 1e-8);
        CHECK(neutral::effective_from_cell(sol, field, grid, 0, mat.E) ==
              doctest::Approx(3.0).epsilon(1e-10));
    }
}

TEST_CASE("discrete maximum principle for p = 2") {
    const auto c = hs_case();
    const auto grid = Grid::make(24, 2.0);
    const auto field = neutral::rasterize(c.spec, c.mat, c.sigma_star, grid, 2);
    const auto sol = neutral::solve_cell(field, c.mat.E, 0);
    REQUIRE(sol.converged);
    CHECK(sol.u.maxCoeff() <= c.mat.E * grid.half_width + 1e-9);
    CHECK(sol.u.minCoeff() >= -c.mat.E * grid.half_width - 1e-9);
}

TEST_CASE("neutral coated sphere beats the non-neutral control") {
    const auto c = hs_case();
    const auto grid = Grid::make(32, 2.0);
    const int axis = 0;

    const auto neutral_field = neutral::rasterize(c.spec, c.mat, c.sigma_star, grid, 3);
    const auto neutral_sol = neutral::solve_cell(neutral_field, c.mat.E, axis);
    REQUIRE(neutral_sol.converged);
    const auto m_neutral =
        neutral::exterior_uniformity(neutral_sol, c.spec, grid, c.mat.E, axis);

    const auto control_field = neutral::rasterize(c.spec, c.mat, c.mat.sigma2, grid, 3);
    const auto control_sol = neutral::solve_cell(control_field, c.mat.E, axis);
    REQUIRE(control_sol.converged);
    const auto m_control =
        neutral::exterior_uniformity(control_sol, c.spec, grid, c.mat.E, axis);

    CHECK(m_neutral.max_u_dev < m_control.max_u_dev);
    CHECK(m_control.max_u_dev > 3.0 * m_neutral.max_u_dev);

    const double sigma_eff =
        neutral::effective_from_cell(neutral_sol, neutral_field, grid, axis, c.mat.E);
    CHECK(std::abs(sigma_eff - c.sigma_star) <= 0.08 * c.sigma_star);
}

TEST_CASE("Picard converges for p = 2.5 with a monotone tail") {
    const auto c = hs_case(2.5);
    const auto grid = Grid::make(24, 2.0);
    const auto field = neutral::rasterize(c.spec, c.mat, c.sigma_star, grid, 2);
    const auto sol = neutral::solve_cell(field, c.mat.E, 0);
    REQUIRE(sol.converged);
    REQUIRE(sol.picard_log.size() >= 2);
    for (std::size_t i = 1; i < sol.picard_log.size(); ++i)
        CHECK(sol.picard_log[i] < sol.picard_log[i - 1]);
}

TEST_CASE("non-convergence is reported, not hidden") {
    const auto c = hs_case(2.5);
    const auto grid = Grid::make(16, 2.0);
    const auto field = neutral::rasterize(c.spec, c.mat, c.sigma_star, grid, 2);
    neutral::SolveOptions opts;
    opts.max_picard = 1;
    const auto sol = neutral::solve_cell(field, c.mat.E, 0, opts);
    CHECK_FALSE(sol.converged);
    CHECK(sol.picard_log.size() == 1);
}

TEST_CASE("identical runs produce identical solutions and logs") {
    const auto c = hs_case(2.5);
    const auto grid = Grid::make(16, 2.0);
    const auto field = neutral::rasterize(c.spec, c.mat, c.sigma_star, grid, 2);
    const auto a = neutral::solve_cell(field, c.mat.E, 0);
    const auto b = neutral::solve_cell(field, c.mat.E, 0);
    CHECK(a.u == b.u);
    CHECK(a.picard_log == b.picard_log);
    CHECK(a.cg_iterations == b.cg_iterations);
}

TEST_CASE("solver input validation") {
    const auto c = hs_case();
    const auto grid = Grid::make(16, 2.0);
    const auto field = neutral::rasterize(c.spec, c.mat, c.sigma_star, grid, 1);
    CHECK_THROWS_AS(neutral::solve_cell(field, 0.0, 0), std::invalid_argument);
    CHECK_THROWS_AS(neutral::solve_cell(field, 1.0, 5), std::invalid_argument);
}
