#pragma once

#include "neutral/core.hpp"
#include "neutral/depolarization.hpp"
#include "neutral/effective.hpp"
#include "neutral/geometry.hpp"
#include "neutral/verifier.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace neutral {

/// One aligned, scaled copy of the prototype: exterior semi-axes
/// scale * l_e centered at `center`.
struct PlacedInclusion {
    Vector3<double> center;
    double scale;
};

/// Finite desk-scale assemblage: aligned scaled copies of one prototype
/// packed into the cubic cell [-cell_half_width, cell_half_width]^3.
/// theta1 and the three K factors are properties of the prototype shape
/// alone (both are scale-free), so they are computed once and shared by
/// every inclusion.
struct Assemblage {
    EllipsoidSpec<double> prototype;
    MaterialPair<double> materials;
    double cell_half_width;
    std::vector<PlacedInclusion> inclusions;
    double fill = 0;
    double theta1 = 0;
    Array3<double> k_factors = Array3<double>::Zero();
};

/// Exact overlap test for aligned scaled copies of a common ellipsoid:
/// the affine map that sends the exterior ellipsoid to the unit sphere
/// turns both inclusions into spheres of radii scale_a, scale_b, so they
/// overlap iff the transformed centers are closer than the radius sum.
/// Tangency counts as non-overlapping.
inline bool overlap_test(const EllipsoidSpec<double>& prototype, const PlacedInclusion& a,
                         const PlacedInclusion& b) {
    const Array3<double> l_e = semi_axes(prototype, prototype.rho_e);
    const Vector3<double> d = ((a.center - b.center).array() / l_e).matrix();
    return d.norm() < a.scale + b.scale;
}

struct PackOptions {
    double target_fill = 0.3;
    int max_inclusions = 64;
    std::uint64_t seed = 1;
    int ladder_levels = 8;
    double ladder_ratio = 0.7;
    double lambda0 = 0.9;          // largest scale, relative to the cell-fitting size
    int max_attempts = 200000;     // consecutive-failure budget before "ladder exhausted"
};

/// Greedy random sequential addition: sample a center uniformly in the
/// cell, then take the largest ladder scale lambda0 * ratio^k that fits
/// inside the cell without overlapping previously placed inclusions.
/// Stops at the fill target, the inclusion budget, or when max_attempts
/// consecutive samples fail at every ladder level.  Deterministic for a
/// fixed seed.
inline Assemblage pack(const EllipsoidSpec<double>& prototype,
                       const MaterialPair<double>& materials, const PackOptions& opts) {
    if (!(opts.target_fill > 0) || !(opts.target_fill < 1))
        throw std::invalid_argument("pack: target_fill must lie in (0, 1)");
    if (opts.max_inclusions < 1 || opts.ladder_levels < 1)
        throw std::invalid_argument("pack: need at least one inclusion and ladder level");
    if (!(opts.ladder_ratio > 0) || !(opts.ladder_ratio < 1))
        throw std::invalid_argument("pack: ladder_ratio must lie in (0, 1)");

    Assemblage assemblage{prototype, materials, 0.0, {}, 0.0, 0.0, Array3<double>::Zero()};
    const Array3<double> l_e = semi_axes(prototype, prototype.rho_e);
    const double w = 2.0 * l_e.maxCoeff();  // cell half width, matching the verifier box
    assemblage.cell_half_width = w;
    assemblage.theta1 = volume_fraction(prototype);
    for (int axis = 0; axis < 3; ++axis) assemblage.k_factors[axis] = k_factor(prototype, axis);

    const double cell_volume = 8.0 * w * w * w;
    const double proto_volume = 4.0 / 3.0 * std::numbers::pi * l_e.prod();
    // lambda0 is relative to the largest copy that fits the cell at all.
    const double lambda_top = opts.lambda0 * (w / l_e.maxCoeff());

    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);

    int failures = 0;
    while (assemblage.fill < opts.target_fill &&
           static_cast<int>(assemblage.inclusions.size()) < opts.max_inclusions &&
           failures < opts.max_attempts) {
        Vector3<double> center(w * unit(rng), w * unit(rng), w * unit(rng));
        bool placed = false;
        double lambda = lambda_top;
        for (int level = 0; level < opts.ladder_levels; ++level, lambda *= opts.ladder_ratio) {
            const bool inside = (center.array().abs() + lambda * l_e <= w).all();
            if (!inside) continue;
            PlacedInclusion candidate{center, lambda};
            bool clash = false;
            for (const auto& other : assemblage.inclusions)
                if (overlap_test(prototype, candidate, other)) {
                    clash = true;
                    break;
                }
            if (clash) continue;
            assemblage.inclusions.push_back(candidate);
            assemblage.fill += proto_volume * lambda * lambda * lambda / cell_volume;
            placed = true;
            break;
        }
        failures = placed ? 0 : failures + 1;
    }
    return assemblage;
}

struct RasterizedAssemblage {
    ConductivityField field;
    int dropped_inclusions = 0;
    double dropped_volume = 0;  // sum of exterior-ellipsoid volumes left out
};

/// Rasterizes every inclusion of the assemblage onto the grid (matrix
/// cells get sigma_star).  Inclusions that the grid cannot resolve with
/// at least 4 cells across their smallest exterior diameter are dropped
/// and reported rather than aliased.
inline RasterizedAssemblage assemblage_to_field(const Assemblage& assemblage, double sigma_star,
                                                const Grid& grid, int subsamples = 3) {
    if (subsamples < 1)
        throw std::invalid_argument("assemblage_to_field: subsamples must be >= 1");
    const EllipsoidSpec<double>& proto = assemblage.prototype;
    const Array3<double> l_e = semi_axes(proto, proto.rho_e);
    const double h = grid.spacing();

    RasterizedAssemblage out;
    out.field.grid = grid;
    out.field.sigma1 = assemblage.materials.sigma1;
    out.field.sigma2 = assemblage.materials.sigma2;
    out.field.sigma_matrix = sigma_star;
    out.field.p = assemblage.materials.p;
    out.field.frac_core = Eigen::ArrayXd::Zero(grid.cells());
    out.field.frac_coat = Eigen::ArrayXd::Zero(grid.cells());

    std::vector<PlacedInclusion> resolved;
    for (const auto& inc : assemblage.inclusions) {
        if (2.0 * inc.scale * l_e.minCoeff() >= 4.0 * h) {
            resolved.push_back(inc);
        } else {
            ++out.dropped_inclusions;
            out.dropped_volume +=
                4.0 / 3.0 * std::numbers::pi * l_e.prod() * inc.scale * inc.scale * inc.scale;
        }
    }

    const int n = grid.n;
    const double inv = 1.0 / (subsamples * subsamples * subsamples);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                const Vector3<double> c = grid.center(i, j, k);
                int core = 0, coat = 0;
                for (int sk = 0; sk < subsamples; ++sk)
                    for (int sj = 0; sj < subsamples; ++sj)
                        for (int si = 0; si < subsamples; ++si) {
                            const Vector3<double> x =
                                c + h * Vector3<double>((si + 0.5) / subsamples - 0.5,
                                                        (sj + 0.5) / subsamples - 0.5,
                                                        (sk + 0.5) / subsamples - 0.5);
                            for (const auto& inc : resolved) {
                                const Vector3<double> local = (x - inc.center) / inc.scale;
                                if (!detail::inside_level(proto, local, proto.rho_e)) continue;
                                if (detail::inside_level(proto, local, proto.rho_c))
                                    ++core;
                                else
                                    ++coat;
                                break;  // non-overlap: at most one inclusion contains x
                            }
                        }
                const std::ptrdiff_t idx = grid.index(i, j, k);
                out.field.frac_core[idx] = core * inv;
                out.field.frac_coat[idx] = coat * inv;
            }
    return out;
}

/// Uniformity metric against the union of all placed inclusions.
inline UniformityMetrics exterior_uniformity(const CellSolution& sol,
                                             const Assemblage& assemblage, const Grid& grid,
                                             double E, int axis) {
    return exterior_uniformity_impl(sol, grid, E, axis, [&](const Vector3<double>& x) {
        double dist = std::numeric_limits<double>::infinity();
        for (const auto& inc : assemblage.inclusions) {
            const Vector3<double> local = (x - inc.center) / inc.scale;
            const double local_dist =
                detail::exterior_distance_estimate(assemblage.prototype, local);
            dist = std::min(dist, local_dist * inc.scale);
            if (dist == 0) break;
        }
        return dist;
    });
}

}  // namespace neutral
