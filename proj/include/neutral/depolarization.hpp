#pragma once

#include "neutral/core.hpp"
#include "neutral/elliptic.hpp"
#include "neutral/geometry.hpp"
#include "neutral/quadrature.hpp"

#include <cmath>

namespace neutral {

/// Shape factors (d1, d2, d3) of an ellipsoid; they sum to one and are
/// independent of scale.
template <typename Scalar>
using DepolarizationTriple = Array3<Scalar>;

/// Depolarization factors of the ellipsoid with the given semi-axes:
///
///   d_j = (l1 l2 l3 / 2) * integral_0^inf dy /
///         ((l_j^2+y) sqrt((l1^2+y)(l2^2+y)(l3^2+y)))
///       = (l1 l2 l3 / 3) * R_D(l_k^2, l_l^2, l_j^2).
///
/// The axes are normalized by the largest one before evaluation, so the
/// result is invariant under any scaling of the triple; scalings that
/// are exact in floating point (powers of two) leave the result bitwise
/// unchanged, and equal axes yield exactly (1/3, 1/3, 1/3).
template <typename Scalar>
DepolarizationTriple<Scalar> depolarization(const Array3<Scalar>& semi_axes) {
    if (!(semi_axes > Scalar(0)).all())
        throw std::invalid_argument("depolarization: semi-axes must be positive");
    const Scalar aspect = semi_axes.maxCoeff() / semi_axes.minCoeff();
    if (aspect > Scalar(1e4))
        throw std::range_error("depolarization: aspect ratio beyond 1e4 not supported");

    const Array3<Scalar> m = semi_axes / semi_axes.maxCoeff();
    const Array3<Scalar> m2 = m * m;
    const Scalar prefactor = m.prod() / Scalar(3);
    DepolarizationTriple<Scalar> d;
    for (int j = 0; j < 3; ++j) {
        const int k = (j + 1) % 3, l = (j + 2) % 3;
        d[j] = prefactor * carlson_rd(m2[k], m2[l], m2[j]);
    }
    return d;
}

/// Antiderivative form of the coating profile integral
///
///   integral_{rho_lo}^{rho_hi} ds / ((c_axis^2+s) g(s))
///
/// via the depolarization identity: the value is
/// 2 d_axis(rho_lo)/g(rho_lo) - 2 d_axis(rho_hi)/g(rho_hi), where the
/// d factors belong to the confocal surfaces at the endpoints.  Valid
/// for any sub-interval, which is what the coating potential needs.
template <typename Scalar>
Scalar coating_profile_integral(const EllipsoidSpec<Scalar>& spec, int axis, Scalar rho_lo,
                                Scalar rho_hi) {
    if (axis < 0 || axis > 2) throw std::invalid_argument("coating_profile_integral: bad axis");
    if (!(rho_lo >= Scalar(0)) || !(rho_hi >= rho_lo))
        throw std::invalid_argument("coating_profile_integral: need 0 <= rho_lo <= rho_hi");
    if (rho_lo == rho_hi) return Scalar(0);
    const Scalar term_lo = depolarization(semi_axes(spec, rho_lo))[axis] / g(spec, rho_lo);
    const Scalar term_hi = depolarization(semi_axes(spec, rho_hi))[axis] / g(spec, rho_hi);
    return Scalar(2) * (term_lo - term_hi);
}

/// Direct adaptive quadrature of the same integrand; the independent
/// route used to cross-check the identity.
template <typename Scalar>
Scalar coating_profile_quadrature(const EllipsoidSpec<Scalar>& spec, int axis, Scalar rho_lo,
                                  Scalar rho_hi, Scalar abs_tol = Scalar(1e-13),
                                  Scalar rel_tol = Scalar(1e-11)) {
    if (rho_lo == rho_hi) return Scalar(0);
    const Array3<Scalar> c2 = spec.c_squared();
    auto integrand = [&spec, &c2, axis](Scalar s) {
        return Scalar(1) / ((c2[axis] + s) * g(spec, s));
    };
    return integrate_adaptive(integrand, rho_lo, rho_hi, abs_tol, rel_tol).value;
}

/// Coating integral over [rho_c, rho_e] along the given axis, computed
/// both by quadrature and by the depolarization identity.  The two must
/// agree to 1e-9 relative; the identity value is returned.
template <typename Scalar>
Scalar coating_integral(const EllipsoidSpec<Scalar>& spec, int axis) {
    const Scalar identity = coating_profile_integral(spec, axis, spec.rho_c, spec.rho_e);
    const Scalar quad = coating_profile_quadrature(spec, axis, spec.rho_c, spec.rho_e);
    using std::abs;
    const Scalar scale = std::max(abs(identity), abs(quad));
    if (scale > Scalar(0) && abs(identity - quad) > Scalar(1e-9) * scale)
        throw ConvergenceError("coating_integral: identity and quadrature routes disagree");
    return identity;
}

/// K = d_c,axis - theta1 * d_e,axis; the scale-free geometric constant of
/// the matching equation, bounded in (0, theta2).
template <typename Scalar>
Scalar k_factor(const EllipsoidSpec<Scalar>& spec, int axis) {
    if (axis < 0 || axis > 2) throw std::invalid_argument("k_factor: bad axis");
    const Scalar theta1 = volume_fraction(spec);
    const Scalar dc = depolarization(semi_axes(spec, spec.rho_c))[axis];
    const Scalar de = depolarization(semi_axes(spec, spec.rho_e))[axis];
    const Scalar k = dc - theta1 * de;
    const Scalar theta2 = Scalar(1) - theta1;
    if (!(k > Scalar(0)) || !(k < theta2))
        throw ConvergenceError("k_factor: K outside (0, theta2); numerical pathology");
    return k;
}

}  // namespace neutral
