#pragma once

#include "neutral/core.hpp"
#include "neutral/effective.hpp"
#include "neutral/geometry.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <ostream>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace neutral {

/// Uniform cell-centered grid on the cube [-half_width, half_width]^3.
struct Grid {
    int n = 0;
    double half_width = 0;

    static Grid make(int n, double half_width) {
        if (n < 16 || n % 2 != 0)
            throw std::invalid_argument("Grid: need n >= 16 and even");
        if (!(half_width > 0)) throw std::invalid_argument("Grid: half_width must be positive");
        return Grid{n, half_width};
    }

    double spacing() const { return 2.0 * half_width / n; }
    std::ptrdiff_t cells() const {
        return static_cast<std::ptrdiff_t>(n) * n * n;
    }
    std::ptrdiff_t index(int i, int j, int k) const {
        return i + static_cast<std::ptrdiff_t>(n) * (j + static_cast<std::ptrdiff_t>(n) * k);
    }
    double coord(int i) const { return -half_width + (i + 0.5) * spacing(); }
    Vector3<double> center(int i, int j, int k) const {
        return {coord(i), coord(j), coord(k)};
    }
};

/// Per-cell material description: volume fractions of core and coating
/// (obtained by sub-sampling each cell), the remaining fraction being
/// matrix.  The scalar cell conductivity is assembled on demand so the
/// nonlinear core coefficient can change between Picard sweeps.
struct ConductivityField {
    Grid grid;
    double sigma1 = 0;
    double sigma2 = 0;
    double sigma_matrix = 0;
    double p = 2;
    Eigen::ArrayXd frac_core;
    Eigen::ArrayXd frac_coat;

    /// Blended scalar conductivity of cell i given the current core
    /// coefficient.  Mixed cells take the geometric mean of the
    /// arithmetic and harmonic fraction-weighted averages, a standard
    /// compromise for unresolved interfaces.
    double cell_sigma(std::ptrdiff_t i, double sigma_core) const {
        const double fc = frac_core[i], fk = frac_coat[i];
        const double fm = 1.0 - fc - fk;
        if (fc == 1.0) return sigma_core;
        if (fk == 1.0) return sigma2;
        if (fm == 1.0) return sigma_matrix;
        const double arith = fc * sigma_core + fk * sigma2 + fm * sigma_matrix;
        const double harm = 1.0 / (fc / sigma_core + fk / sigma2 + fm / sigma_matrix);
        return std::sqrt(arith * harm);
    }
};

namespace detail {

// Region test without the cubic solve: the confocal quadric at level t
// is < 1 exactly when rho(x) < t.
inline bool inside_level(const EllipsoidSpec<double>& spec, const Vector3<double>& x,
                         double level) {
    return (x.array().square() / (spec.c_squared() + level)).sum() <= 1.0;
}

}  // namespace detail

/// Rasterizes the prototype (centered at the origin) onto the grid.
/// Each cell is probed at subsamples^3 interior points; fractions are
/// the sample counts.  Requires clearance >= 4h between the exterior
/// surface and every box face.
inline ConductivityField rasterize(const EllipsoidSpec<double>& spec,
                                   const MaterialPair<double>& mat, double sigma_star,
                                   const Grid& grid, int subsamples = 3) {
    if (subsamples < 1) throw std::invalid_argument("rasterize: subsamples must be >= 1");
    const Array3<double> l_e = semi_axes(spec, spec.rho_e);
    const double h = grid.spacing();
    if ((grid.half_width - l_e.maxCoeff()) < 4.0 * h)
        throw std::invalid_argument("rasterize: inclusion clearance below 4 cells");

    ConductivityField field;
    field.grid = grid;
    field.sigma1 = mat.sigma1;
    field.sigma2 = mat.sigma2;
    field.sigma_matrix = sigma_star;
    field.p = mat.p;
    field.frac_core = Eigen::ArrayXd::Zero(grid.cells());
    field.frac_coat = Eigen::ArrayXd::Zero(grid.cells());

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
                            if (detail::inside_level(spec, x, spec.rho_c))
                                ++core;
                            else if (detail::inside_level(spec, x, spec.rho_e))
                                ++coat;
                        }
                const std::ptrdiff_t idx = grid.index(i, j, k);
                field.frac_core[idx] = core * inv;
                field.frac_coat[idx] = coat * inv;
            }
    return field;
}

struct SolveOptions {
    double tol_linear = 1e-10;
    int max_cg = 50000;
    double tol_picard = 1e-8;
    int max_picard = 80;
    double omega = 0.5;  // initial under-relaxation for p != 2
};

struct CellSolution {
    Eigen::VectorXd u;                 // cell-centered potentials
    std::vector<double> picard_log;    // successive-iterate relative change
    int cg_iterations = 0;
    bool converged = false;
};

namespace detail {

// Symmetric 7-point variable-coefficient operator with Dirichlet closure
// at half-cell spacing.  Face conductivities are harmonic means of the
// adjacent cell values.
struct StencilOp {
    int n = 0;
    Eigen::ArrayXd cxp, cyp, czp;  // coefficient to the +x/+y/+z neighbor
    Eigen::ArrayXd diag;
    Eigen::VectorXd b;

    static double harmonic(double a, double b) { return 2.0 * a * b / (a + b); }

    void assemble(const Grid& grid, const Eigen::ArrayXd& sigma, double E, int axis) {
        n = grid.n;
        const std::ptrdiff_t N = grid.cells();
        cxp = Eigen::ArrayXd::Zero(N);
        cyp = Eigen::ArrayXd::Zero(N);
        czp = Eigen::ArrayXd::Zero(N);
        diag = Eigen::ArrayXd::Zero(N);
        b = Eigen::VectorXd::Zero(N);

        for (int k = 0; k < n; ++k)
            for (int j = 0; j < n; ++j)
                for (int i = 0; i < n; ++i) {
                    const std::ptrdiff_t idx = grid.index(i, j, k);
                    const double s = sigma[idx];
                    // +x face
                    if (i + 1 < n) {
                        const double c = harmonic(s, sigma[idx + 1]);
                        cxp[idx] = c;
                        diag[idx] += c;
                        diag[idx + 1] += c;
                    } else {
                        Vector3<double> pos(grid.half_width, grid.coord(j), grid.coord(k));
                        diag[idx] += 2.0 * s;
                        b[idx] += 2.0 * s * E * pos[axis];
                    }
                    if (i == 0) {
                        Vector3<double> pos(-grid.half_width, grid.coord(j), grid.coord(k));
                        diag[idx] += 2.0 * s;
                        b[idx] += 2.0 * s * E * pos[axis];
                    }
                    // +y face
                    if (j + 1 < n) {
                        const double c = harmonic(s, sigma[idx + n]);
                        cyp[idx] = c;
                        diag[idx] += c;
                        diag[idx + n] += c;
                    } else {
                        Vector3<double> pos(grid.coord(i), grid.half_width, grid.coord(k));
                        diag[idx] += 2.0 * s;
                        b[idx] += 2.0 * s * E * pos[axis];
                    }
                    if (j == 0) {
                        Vector3<double> pos(grid.coord(i), -grid.half_width, grid.coord(k));
                        diag[idx] += 2.0 * s;
                        b[idx] += 2.0 * s * E * pos[axis];
                    }
                    // +z face
                    if (k + 1 < n) {
                        const std::ptrdiff_t up = idx + static_cast<std::ptrdiff_t>(n) * n;
                        const double c = harmonic(s, sigma[up]);
                        czp[idx] = c;
                        diag[idx] += c;
                        diag[up] += c;
                    } else {
                        Vector3<double> pos(grid.coord(i), grid.coord(j), grid.half_width);
                        diag[idx] += 2.0 * s;
                        b[idx] += 2.0 * s * E * pos[axis];
                    }
                    if (k == 0) {
                        Vector3<double> pos(grid.coord(i), grid.coord(j), -grid.half_width);
                        diag[idx] += 2.0 * s;
                        b[idx] += 2.0 * s * E * pos[axis];
                    }
                }
    }

    void apply(const Eigen::VectorXd& u, Eigen::VectorXd& out) const {
        const std::ptrdiff_t nn = static_cast<std::ptrdiff_t>(n) * n;
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
        for (int k = 0; k < n; ++k)
            for (int j = 0; j < n; ++j)
                for (int i = 0; i < n; ++i) {
                    const std::ptrdiff_t idx =
                        i + static_cast<std::ptrdiff_t>(n) * j + nn * k;
                    double v = diag[idx] * u[idx];
                    if (i + 1 < n) v -= cxp[idx] * u[idx + 1];
                    if (i > 0) v -= cxp[idx - 1] * u[idx - 1];
                    if (j + 1 < n) v -= cyp[idx] * u[idx + n];
                    if (j > 0) v -= cyp[idx - n] * u[idx - n];
                    if (k + 1 < n) v -= czp[idx] * u[idx + nn];
                    if (k > 0) v -= czp[idx - nn] * u[idx - nn];
                    out[idx] = v;
                }
    }

    // Jacobi-preconditioned conjugate gradients; returns iterations used
    // or -1 on failure to reach tol.
    int pcg(Eigen::VectorXd& u, double tol, int max_iter) const {
        const std::ptrdiff_t N = b.size();
        Eigen::VectorXd r(N), z(N), pvec(N), q(N);
        apply(u, r);
        r = b - r;
        const double bnorm = b.norm();
        const double target = tol * (bnorm > 0 ? bnorm : 1.0);
        if (r.norm() <= target) return 0;
        z = (r.array() / diag).matrix();
        pvec = z;
        double rz = r.dot(z);
        for (int it = 1; it <= max_iter; ++it) {
            apply(pvec, q);
            const double alpha = rz / pvec.dot(q);
            u += alpha * pvec;
            r -= alpha * q;
            if (r.norm() <= target) return it;
            z = (r.array() / diag).matrix();
            const double rz_new = r.dot(z);
            pvec = z + (rz_new / rz) * pvec;
            rz = rz_new;
        }
        return -1;
    }
};

// Central-difference gradient at a cell, one-sided against the Dirichlet
// data at box faces.
inline Vector3<double> cell_gradient(const Grid& grid, const Eigen::VectorXd& u, int i, int j,
                                     int k, double E, int axis) {
    const double h = grid.spacing();
    const int n = grid.n;
    const std::ptrdiff_t nn = static_cast<std::ptrdiff_t>(n) * n;
    const std::ptrdiff_t idx = grid.index(i, j, k);
    Vector3<double> grad;
    const int ijk[3] = {i, j, k};
    const std::ptrdiff_t stride[3] = {1, n, nn};
    for (int d = 0; d < 3; ++d) {
        const double lo_val =
            ijk[d] > 0 ? u[idx - stride[d]]
                       : 2.0 * E * (d == axis ? -grid.half_width : grid.center(i, j, k)[axis]) -
                             u[idx];
        const double hi_val =
            ijk[d] + 1 < n ? u[idx + stride[d]]
                           : 2.0 * E * (d == axis ? grid.half_width : grid.center(i, j, k)[axis]) -
                                 u[idx];
        grad[d] = (hi_val - lo_val) / (2.0 * h);
    }
    return grad;
}

}  // namespace detail

/// Solves the conduction cell problem with Dirichlet data u = E x_axis
/// on all box faces.  For p = 2 this is a single conjugate-gradient
/// solve; otherwise damped Picard sweeps freeze the regularized core
/// coefficient sigma1 (|grad u|^2 + eps^2)^{(p-2)/2} between solves.
inline CellSolution solve_cell(const ConductivityField& field, double E, int axis,
                               const SolveOptions& opts = {}) {
    if (axis < 0 || axis > 2) throw std::invalid_argument("solve_cell: bad axis");
    if (!(opts.tol_linear > 0) || !(opts.tol_picard > 0))
        throw std::invalid_argument("solve_cell: tolerances must be positive");
    if (E == 0) throw std::invalid_argument("solve_cell: needs a nonzero applied field");

    const Grid& grid = field.grid;
    const int n = grid.n;
    const std::ptrdiff_t N = grid.cells();
    const double p = field.p;
    const double eps_reg = 1e-8 * std::abs(E) / grid.half_width;

    CellSolution sol;
    sol.u.resize(N);
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i)
                sol.u[grid.index(i, j, k)] = E * grid.center(i, j, k)[axis];

    Eigen::ArrayXd sigma(N);
    detail::StencilOp op;

    auto assemble_sigma = [&](const Eigen::VectorXd& u) {
        if (p == 2.0) {
            for (std::ptrdiff_t i = 0; i < N; ++i) sigma[i] = field.cell_sigma(i, field.sigma1);
            return;
        }
        for (int k = 0; k < n; ++k)
            for (int j = 0; j < n; ++j)
                for (int i = 0; i < n; ++i) {
                    const std::ptrdiff_t idx = grid.index(i, j, k);
                    double score = field.sigma1;
                    if (field.frac_core[idx] > 0) {
                        const double g2 =
                            detail::cell_gradient(grid, u, i, j, k, E, axis).squaredNorm();
                        score = field.sigma1 *
                                std::pow(g2 + eps_reg * eps_reg, (p - 2.0) / 2.0);
                    }
                    sigma[idx] = field.cell_sigma(idx, score);
                }
    };

    const double u_scale = std::max(std::abs(E) * grid.half_width, 1e-300);
    double omega = opts.omega;
    double prev_change = std::numeric_limits<double>::infinity();

    const int sweeps = (p == 2.0) ? 1 : opts.max_picard;
    for (int sweep = 0; sweep < sweeps; ++sweep) {
        assemble_sigma(sol.u);
        op.assemble(grid, sigma, E, axis);
        Eigen::VectorXd u_lin = sol.u;
        const int iters = op.pcg(u_lin, opts.tol_linear, opts.max_cg);
        if (iters < 0) {
            sol.converged = false;
            return sol;
        }
        sol.cg_iterations += iters;

        if (p == 2.0) {
            sol.u = u_lin;
            sol.converged = true;
            return sol;
        }

        const double change = (u_lin - sol.u).lpNorm<Eigen::Infinity>() / u_scale;
        sol.picard_log.push_back(change);
        if (change > prev_change) omega = std::max(omega / 2.0, 1.0 / 64.0);
        prev_change = change;
        sol.u += omega * (u_lin - sol.u);
        if (change < opts.tol_picard) {
            sol.converged = true;
            return sol;
        }
    }
    sol.converged = false;
    return sol;
}

struct UniformityMetrics {
    double max_u_dev = 0;     // max |u - E x_axis| / (|E| L)
    double max_grad_dev = 0;  // max ||grad u - E e_axis|| / |E|
    std::ptrdiff_t cells = 0;
};

namespace detail {

// First-order distance from x to the level-rho_e confocal surface via
// the quadric value and gradient (Taubin estimate); cheap and accurate
// near the surface, which is where the clearance cut matters.
inline double exterior_distance_estimate(const EllipsoidSpec<double>& spec,
                                         const Vector3<double>& x) {
    const Array3<double> den = spec.c_squared() + spec.rho_e;
    const double f = (x.array().square() / den).sum() - 1.0;
    if (f <= 0) return 0.0;
    const double gn = (2.0 * x.array() / den).matrix().norm();
    return f / gn;
}

}  // namespace detail

/// Deviation of the discrete solution from the undisturbed field
/// u = E x_axis over exterior cells with clearance >= 2h from the
/// inclusion surface(s).  `surface_distance` maps a cell center to its
/// distance from the nearest exterior surface (0 if not fully exterior).
template <typename DistanceFn>
UniformityMetrics exterior_uniformity_impl(const CellSolution& sol, const Grid& grid, double E,
                                           int axis, DistanceFn&& surface_distance) {
    UniformityMetrics m;
    const double h = grid.spacing();
    const double u_ref_scale = std::abs(E) * grid.half_width;
    for (int k = 0; k < grid.n; ++k)
        for (int j = 0; j < grid.n; ++j)
            for (int i = 0; i < grid.n; ++i) {
                const Vector3<double> x = grid.center(i, j, k);
                if (surface_distance(x) < 2.0 * h) continue;
                ++m.cells;
                const std::ptrdiff_t idx = grid.index(i, j, k);
                const double u_dev = std::abs(sol.u[idx] - E * x[axis]);
                m.max_u_dev = std::max(m.max_u_dev, u_dev / u_ref_scale);
                const Vector3<double> grad =
                    detail::cell_gradient(grid, sol.u, i, j, k, E, axis);
                const double g_dev =
                    (grad - E * Vector3<double>::Unit(axis)).norm() / std::abs(E);
                m.max_grad_dev = std::max(m.max_grad_dev, g_dev);
            }
    return m;
}

/// Uniformity metric for a single centered prototype.
inline UniformityMetrics exterior_uniformity(const CellSolution& sol,
                                             const EllipsoidSpec<double>& spec,
                                             const Grid& grid, double E, int axis) {
    return exterior_uniformity_impl(sol, grid, E, axis, [&](const Vector3<double>& x) {
        return detail::exterior_distance_estimate(spec, x);
    });
}

/// Volume-averaged flux component <sigma du/dx_axis> / E from the
/// conservative face fluxes of the converged solution.
inline double effective_from_cell(const CellSolution& sol, const ConductivityField& field,
                                  const Grid& grid, int axis, double E) {
    const int n = grid.n;
    const double h = grid.spacing();
    const std::ptrdiff_t stride[3] = {1, n, static_cast<std::ptrdiff_t>(n) * n};

    // Rebuild the per-cell conductivities the converged state used.
    Eigen::ArrayXd sigma(grid.cells());
    const double p = field.p;
    const double eps_reg = 1e-8 * std::abs(E) / grid.half_width;
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                const std::ptrdiff_t idx = grid.index(i, j, k);
                double score = field.sigma1;
                if (p != 2.0 && field.frac_core[idx] > 0) {
                    const double g2 =
                        detail::cell_gradient(grid, sol.u, i, j, k, E, axis).squaredNorm();
                    score = field.sigma1 * std::pow(g2 + eps_reg * eps_reg, (p - 2.0) / 2.0);
                }
                sigma[idx] = field.cell_sigma(idx, score);
            }

    double total = 0;
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                const std::ptrdiff_t idx = grid.index(i, j, k);
                const int ijk[3] = {i, j, k};
                double flux_lo, flux_hi;
                if (ijk[axis] > 0) {
                    const std::ptrdiff_t nb = idx - stride[axis];
                    flux_lo = detail::StencilOp::harmonic(sigma[idx], sigma[nb]) *
                              (sol.u[idx] - sol.u[nb]) / h;
                } else {
                    Vector3<double> pos = grid.center(i, j, k);
                    pos[axis] = -grid.half_width;
                    flux_lo = sigma[idx] * (sol.u[idx] - E * pos[axis]) / (h / 2.0);
                }
                if (ijk[axis] + 1 < n) {
                    const std::ptrdiff_t nb = idx + stride[axis];
                    flux_hi = detail::StencilOp::harmonic(sigma[idx], sigma[nb]) *
                              (sol.u[nb] - sol.u[idx]) / h;
                } else {
                    Vector3<double> pos = grid.center(i, j, k);
                    pos[axis] = grid.half_width;
                    flux_hi = sigma[idx] * (E * pos[axis] - sol.u[idx]) / (h / 2.0);
                }
                total += 0.5 * (flux_lo + flux_hi);
            }
    return total / (static_cast<double>(grid.cells()) * E);
}

/// Flat CSV dump of the nodal potentials: index, x, y, z, u.
inline void write_field_csv(std::ostream& os, const CellSolution& sol, const Grid& grid) {
    os.precision(17);
    os << "index,x,y,z,u\n";
    for (int k = 0; k < grid.n; ++k)
        for (int j = 0; j < grid.n; ++j)
            for (int i = 0; i < grid.n; ++i) {
                const std::ptrdiff_t idx = grid.index(i, j, k);
                const Vector3<double> x = grid.center(i, j, k);
                os << idx << ',' << x[0] << ',' << x[1] << ',' << x[2] << ',' << sol.u[idx]
                   << '\n';
            }
}

}  // namespace neutral
