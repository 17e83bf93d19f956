#pragma once

#include "neutral/core.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace neutral {

/// Confocal coordinate system constants c1, c2, c3 plus the two shell
/// parameters rho_c (core surface) and rho_e (exterior surface) that
/// define one coated prototype.  rho plays the role of a radius: the
/// surface at parameter t is the ellipsoid with semi-axes sqrt(c_j^2+t).
template <typename Scalar>
struct EllipsoidSpec {
    Array3<Scalar> c;
    Scalar rho_c;
    Scalar rho_e;

    static EllipsoidSpec make(const Array3<Scalar>& c, Scalar rho_c, Scalar rho_e) {
        if (!(c > Scalar(0)).all())
            throw std::invalid_argument("EllipsoidSpec: coordinate constants must be positive");
        if (!(rho_c > Scalar(0)) || !(rho_c < rho_e))
            throw std::invalid_argument("EllipsoidSpec: need 0 < rho_c < rho_e");
        return EllipsoidSpec{c, rho_c, rho_e};
    }

    static EllipsoidSpec make(Scalar c1, Scalar c2, Scalar c3, Scalar rho_c, Scalar rho_e) {
        return make(Array3<Scalar>(c1, c2, c3), rho_c, rho_e);
    }

    /// Sphere prototype from core/exterior radii; the ellipsoidal chart
    /// degenerates, so c is chosen as r_c/sqrt(2) to keep rho_c positive.
    static EllipsoidSpec make_sphere(Scalar r_core, Scalar r_exterior) {
        if (!(r_core > Scalar(0)) || !(r_core < r_exterior))
            throw std::invalid_argument("EllipsoidSpec: need 0 < r_core < r_exterior");
        const Scalar c = r_core / std::numbers::sqrt2_v<Scalar>;
        return make(Array3<Scalar>(c, c, c), r_core * r_core - c * c,
                    r_exterior * r_exterior - c * c);
    }

    Array3<Scalar> c_squared() const { return c * c; }
    bool is_sphere() const { return c[0] == c[1] && c[1] == c[2]; }
};

enum class Region { Core, Coating, Exterior, CoreInterface, ExteriorInterface };

/// Point in ellipsoidal coordinates.  The coordinates only determine the
/// squares of the Cartesian components; octant carries the signs.
template <typename Scalar>
struct EllipsoidalPoint {
    Scalar rho;
    Scalar mu;
    Scalar nu;
    Array3<int> octant = Array3<int>(1, 1, 1);
};

/// g(t) = sqrt((c1^2+t)(c2^2+t)(c3^2+t)); equals the product of the
/// semi-axes of the confocal surface at t.
template <typename Scalar>
Scalar g(const EllipsoidSpec<Scalar>& spec, Scalar t) {
    const Array3<Scalar> factors = spec.c_squared() + t;
    if (!(factors > Scalar(0)).all())
        throw std::domain_error("g: t must exceed -min(c_j^2)");
    using std::sqrt;
    return sqrt(factors.prod());
}

/// Semi-axis lengths sqrt(c_j^2 + rho) of the confocal surface at rho.
template <typename Scalar>
Array3<Scalar> semi_axes(const EllipsoidSpec<Scalar>& spec, Scalar rho) {
    if (!(rho >= Scalar(0)))
        throw std::invalid_argument("semi_axes: rho must be non-negative");
    return (spec.c_squared() + rho).sqrt();
}

/// Core volume fraction theta_1.  Computed from the semi-axis products
/// and checked against the g-ratio g(rho_c)/g(rho_e); the two routes are
/// algebraically identical and must agree to 1e-12 relative.
template <typename Scalar>
Scalar volume_fraction(const EllipsoidSpec<Scalar>& spec) {
    const Scalar by_axes =
        semi_axes(spec, spec.rho_c).prod() / semi_axes(spec, spec.rho_e).prod();
    const Scalar by_g = g(spec, spec.rho_c) / g(spec, spec.rho_e);
    using std::abs;
    if (abs(by_axes - by_g) > Scalar(1e-12) * abs(by_g))
        throw ConvergenceError("volume_fraction: semi-axis and g-ratio routes disagree");
    return by_axes;
}

/// Sum_j x_j^2/(c_j^2+rho) - 1; the confocal-ellipsoid equation residual.
template <typename Derived>
typename Derived::Scalar confocal_residual(
    const EllipsoidSpec<typename Derived::Scalar>& spec, const Eigen::MatrixBase<Derived>& x,
    typename Derived::Scalar rho) {
    using Scalar = typename Derived::Scalar;
    const Array3<Scalar> den = spec.c_squared() + rho;
    return (x.derived().array().square() / den).sum() - Scalar(1);
}

namespace detail {

// Real roots of t^3 + a2 t^2 + a1 t + a0, largest first.  Uses the
// trigonometric form when all roots are real, Cardano otherwise.
template <typename Scalar>
Array3<Scalar> cubic_roots(Scalar a2, Scalar a1, Scalar a0) {
    using std::abs;
    using std::acos;
    using std::cbrt;
    using std::cos;
    using std::sqrt;

    const Scalar shift = a2 / Scalar(3);
    const Scalar p = a1 - a2 * shift;
    const Scalar q = Scalar(2) * shift * shift * shift - shift * a1 + a0;

    Array3<Scalar> roots;
    const Scalar quarter_disc = q * q / Scalar(4) + p * p * p / Scalar(27);
    if (p < Scalar(0) && quarter_disc <= Scalar(0)) {
        const Scalar m = Scalar(2) * sqrt(-p / Scalar(3));
        Scalar arg = Scalar(3) * q / (p * m);
        arg = std::clamp(arg, Scalar(-1), Scalar(1));
        const Scalar theta = acos(arg) / Scalar(3);
        const Scalar two_thirds_pi = Scalar(2) * std::numbers::pi_v<Scalar> / Scalar(3);
        for (int k = 0; k < 3; ++k) roots[k] = m * cos(theta - Scalar(k) * two_thirds_pi) - shift;
    } else {
        // Single real root (or numerically collapsed pair).
        const Scalar s = sqrt(std::max(quarter_disc, Scalar(0)));
        const Scalar t = cbrt(-q / Scalar(2) + s) + cbrt(-q / Scalar(2) - s);
        roots.setConstant(t - shift);
    }
    return roots;
}

// All three roots of the confocal cubic for x != 0 (rho, mu, nu in
// descending order), without polish.
template <typename Scalar>
Array3<Scalar> confocal_roots(const EllipsoidSpec<Scalar>& spec, const Vector3<Scalar>& x) {
    const Array3<Scalar> c2 = spec.c_squared();
    const Array3<Scalar> x2 = x.array().square();
    const Scalar e1 = c2.sum();
    const Scalar e2 = c2[0] * c2[1] + c2[0] * c2[2] + c2[1] * c2[2];
    const Scalar e3 = c2.prod();
    const Array3<Scalar> pair_sum = e1 - c2;                       // c_k^2 + c_l^2, k,l != j
    const Array3<Scalar> pair_prod(c2[1] * c2[2], c2[0] * c2[2], c2[0] * c2[1]);
    const Scalar a2 = e1 - x2.sum();
    const Scalar a1 = e2 - (x2 * pair_sum).sum();
    const Scalar a0 = e3 - (x2 * pair_prod).sum();
    return cubic_roots(a2, a1, a0);
}

}  // namespace detail

/// The unique root rho > -min(c_j^2) of the confocal equation for x.
/// Closed-form cubic solve followed by a safeguarded Newton polish on
/// the original rational equation.
template <typename Derived>
typename Derived::Scalar rho_from_cartesian(
    const EllipsoidSpec<typename Derived::Scalar>& spec,
    const Eigen::MatrixBase<Derived>& x_expr) {
    using Scalar = typename Derived::Scalar;
    const Vector3<Scalar> x = x_expr;
    using std::abs;
    if (x.squaredNorm() == Scalar(0))
        throw std::invalid_argument("rho_from_cartesian: undefined at the origin");
    if (spec.is_sphere()) return x.squaredNorm() - spec.c[0] * spec.c[0];

    const Scalar cmin2 = spec.c_squared().minCoeff();
    const Scalar scale = spec.c_squared().maxCoeff() + x.squaredNorm();
    Scalar rho = detail::confocal_roots(spec, x)[0];

    const Scalar floor_rho = -cmin2 + Scalar(16) * std::numeric_limits<Scalar>::epsilon() * scale;
    // Points on the shortest-axis plane inside the focal ellipse sit on
    // the degenerate surface rho = -min(c^2); return the boundary value
    // (continuous extension) instead of hunting for a root that is not
    // there.
    if (confocal_residual(spec, x, floor_rho) < Scalar(0)) return floor_rho;

    // Establish a sign-change bracket around the estimate; F is strictly
    // decreasing and convex on (-cmin^2, inf).
    rho = std::max(rho, floor_rho);
    Scalar lo = rho, hi = rho;
    Scalar step = std::max(abs(rho), scale) * Scalar(1e-8);
    for (int i = 0; confocal_residual(spec, x, lo) <= Scalar(0); ++i) {
        if (i > 200) throw ConvergenceError("rho_from_cartesian: bracket expansion failed");
        lo = std::max(lo - step, floor_rho);
        step *= Scalar(2);
        if (lo == floor_rho) break;
    }
    step = std::max(abs(rho), scale) * Scalar(1e-8);
    for (int i = 0; confocal_residual(spec, x, hi) >= Scalar(0); ++i) {
        if (i > 200) throw ConvergenceError("rho_from_cartesian: bracket expansion failed");
        hi += step;
        step *= Scalar(2);
    }

    rho = std::clamp(rho, lo, hi);
    for (int iter = 0; iter < 60; ++iter) {
        const Scalar f = confocal_residual(spec, x, rho);
        if (f > Scalar(0))
            lo = rho;
        else
            hi = rho;
        const Array3<Scalar> den = spec.c_squared() + rho;
        const Scalar df = -(x.array().square() / (den * den)).sum();
        Scalar next = rho - f / df;
        if (!(next > lo && next < hi)) next = (lo + hi) / Scalar(2);
        if (abs(next - rho) <= std::numeric_limits<Scalar>::epsilon() * (abs(rho) + scale)) {
            rho = next;
            break;
        }
        rho = next;
    }
    // Near the degenerate plane |F'| explodes and the residual at the
    // correctly rounded root is conditioning-limited; widen the sanity
    // bound by that factor.
    const Array3<Scalar> den = spec.c_squared() + rho;
    const Scalar steepness = (x.array().square() / (den * den)).sum();
    const Scalar tol = Scalar(1e-11) +
                       Scalar(8) * std::numeric_limits<Scalar>::epsilon() * steepness *
                           (abs(rho) + Scalar(1));
    if (abs(confocal_residual(spec, x, rho)) > tol)
        throw ConvergenceError("rho_from_cartesian: polish failed (numerical pathology)");
    return rho;
}

/// All three ellipsoidal coordinates of x; requires the strictly ordered
/// chart c1 < c2 < c3.  Only rho is polished (mu, nu are test-support
/// coordinates; the solution construction never consumes them).
template <typename Scalar>
EllipsoidalPoint<Scalar> ellipsoidal_from_cartesian(const EllipsoidSpec<Scalar>& spec,
                                                    const Vector3<Scalar>& x) {
    if (!(spec.c[0] < spec.c[1] && spec.c[1] < spec.c[2]))
        throw std::domain_error("ellipsoidal_from_cartesian: chart requires c1 < c2 < c3");
    if (x.squaredNorm() == Scalar(0))
        throw std::invalid_argument("ellipsoidal_from_cartesian: undefined at the origin");
    const Array3<Scalar> roots = detail::confocal_roots(spec, x);
    EllipsoidalPoint<Scalar> pt;
    pt.rho = rho_from_cartesian(spec, x);
    pt.mu = roots[1];
    pt.nu = roots[2];
    for (int j = 0; j < 3; ++j) pt.octant[j] = x[j] < Scalar(0) ? -1 : 1;
    return pt;
}

/// Cartesian point from ellipsoidal coordinates (triple-product formula,
/// signs from the octant).  Requires c1 < c2 < c3 and the strict chain
/// rho > -c1^2 > mu > -c2^2 > nu > -c3^2.
template <typename Scalar>
Vector3<Scalar> cartesian_from_ellipsoidal(const EllipsoidSpec<Scalar>& spec,
                                           const EllipsoidalPoint<Scalar>& pt) {
    using std::abs;
    using std::sqrt;
    const Array3<Scalar> c2 = spec.c_squared();
    if (!(spec.c[0] < spec.c[1] && spec.c[1] < spec.c[2]))
        throw std::domain_error("cartesian_from_ellipsoidal: chart requires c1 < c2 < c3");
    if (!(pt.rho > -c2[0] && -c2[0] >= pt.mu && pt.mu >= -c2[1] && -c2[1] >= pt.nu &&
          pt.nu >= -c2[2]))
        throw std::domain_error("cartesian_from_ellipsoidal: coordinate chain violated");

    const Scalar clamp_scale = c2.maxCoeff() + abs(pt.rho);
    Vector3<Scalar> x;
    for (int j = 0; j < 3; ++j) {
        const int k = (j + 1) % 3, l = (j + 2) % 3;
        const Scalar num = (c2[j] + pt.rho) * (c2[j] + pt.mu) * (c2[j] + pt.nu);
        const Scalar den = (c2[j] - c2[k]) * (c2[j] - c2[l]);
        Scalar xj2 = num / den;
        if (xj2 < Scalar(-1e-14) * clamp_scale)
            throw std::domain_error("cartesian_from_ellipsoidal: negative squared coordinate");
        xj2 = std::max(xj2, Scalar(0));
        x[j] = Scalar(pt.octant[j]) * sqrt(xj2);
    }
    return x;
}

/// Scale-proportional default width of the interface tolerance band.
template <typename Scalar>
Scalar default_interface_tol(const EllipsoidSpec<Scalar>& spec) {
    return Scalar(1e-9) * spec.rho_e;
}

/// Region of x relative to the coated prototype, with tolerance bands of
/// half-width tol around the two interfaces.
template <typename Derived>
Region classify_point(const EllipsoidSpec<typename Derived::Scalar>& spec,
                      const Eigen::MatrixBase<Derived>& x_expr,
                      typename Derived::Scalar tol) {
    using Scalar = typename Derived::Scalar;
    const Vector3<Scalar> x = x_expr;
    if (!(tol >= Scalar(0))) throw std::invalid_argument("classify_point: tol must be >= 0");
    if (x.squaredNorm() == Scalar(0)) return Region::Core;  // rho -> -c1^2 side
    const Scalar rho = rho_from_cartesian(spec, x);
    if (rho < spec.rho_c - tol) return Region::Core;
    if (rho <= spec.rho_c + tol) return Region::CoreInterface;
    if (rho < spec.rho_e - tol) return Region::Coating;
    if (rho <= spec.rho_e + tol) return Region::ExteriorInterface;
    return Region::Exterior;
}

template <typename Derived>
Region classify_point(const EllipsoidSpec<typename Derived::Scalar>& spec,
                      const Eigen::MatrixBase<Derived>& x) {
    return classify_point(spec, x, default_interface_tol(spec));
}

/// Gradient of the confocal quadric F_xi(x) = sum x_j^2/(c_j^2+xi); the
/// exact normal direction of the coordinate surface through x.
template <typename Derived>
Vector3<typename Derived::Scalar> quadric_gradient(
    const EllipsoidSpec<typename Derived::Scalar>& spec, const Eigen::MatrixBase<Derived>& x,
    typename Derived::Scalar xi) {
    using Scalar = typename Derived::Scalar;
    return (Scalar(2) * x.derived().array() / (spec.c_squared() + xi)).matrix();
}

/// grad(rho) by implicit differentiation of the confocal equation.
template <typename Derived>
Vector3<typename Derived::Scalar> grad_rho(
    const EllipsoidSpec<typename Derived::Scalar>& spec, const Eigen::MatrixBase<Derived>& x,
    typename Derived::Scalar rho) {
    using Scalar = typename Derived::Scalar;
    const Array3<Scalar> den = spec.c_squared() + rho;
    const Scalar d = (x.derived().array().square() / (den * den)).sum();
    return (Scalar(2) * x.derived().array() / den).matrix() / d;
}

}  // namespace neutral
