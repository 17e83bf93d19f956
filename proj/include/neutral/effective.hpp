#pragma once

#include "neutral/core.hpp"
#include "neutral/depolarization.hpp"
#include "neutral/geometry.hpp"
#include "neutral/matching.hpp"

#include <cmath>
#include <sstream>

namespace neutral {

/// Core material sigma1 |grad u|^{p-2} (p-law), linear coating sigma2,
/// and the applied field magnitude E.  For p != 2 the effective
/// conductivity of the assemblage depends on E through |A1|^{p-2}; all
/// results are reported at the given field strength.
template <typename Scalar>
struct MaterialPair {
    Scalar sigma1;
    Scalar sigma2;
    Scalar p;
    Scalar E;

    static MaterialPair make(Scalar sigma1, Scalar sigma2, Scalar p, Scalar E) {
        if (!(sigma1 > Scalar(0)) || !(sigma2 > Scalar(0)))
            throw std::invalid_argument("MaterialPair: conductivities must be positive");
        if (!(p > Scalar(1))) throw std::invalid_argument("MaterialPair: need p > 1");
        return MaterialPair{sigma1, sigma2, p, E};
    }
};

template <typename Scalar>
struct EffectiveResult {
    Array3<Scalar> sigma_star;
    Array3<Scalar> x0_per_axis;
    Array3<Scalar> a1_per_axis;
    Array3<Scalar> k_per_axis;
    Scalar theta1;
};

/// Effective conductivity of the core material at the realized interior
/// field coefficient a1.
template <typename Scalar>
Scalar core_effective_sigma(const MaterialPair<Scalar>& mat, Scalar a1) {
    using std::abs;
    using std::pow;
    if (a1 == Scalar(0)) {
        if (mat.p < Scalar(2))
            throw std::domain_error("core_effective_sigma: |A1|^{p-2} singular at A1 = 0");
        return mat.p == Scalar(2) ? mat.sigma1 : Scalar(0);
    }
    return mat.sigma1 * pow(abs(a1), mat.p - Scalar(2));
}

namespace detail {

// denom = sigma2 (1-K) + s1_eff K > 0 whenever s1_eff >= 0 and 0 < K < 1;
// the guard only fires on inputs outside the model's assumptions.
template <typename Scalar>
Scalar effective_from_k_theta(Scalar sigma2, Scalar s1_eff, Scalar theta1, Scalar k) {
    const Scalar denom = sigma2 + (s1_eff - sigma2) * k;
    if (!(denom > Scalar(0)) || !std::isfinite(denom)) {
        std::ostringstream msg;
        msg << "effective_conductivity: singular denominator (sigma2=" << sigma2
            << ", s1_eff=" << s1_eff << ", theta1=" << theta1 << ", K=" << k << ")";
        throw std::domain_error(msg.str());
    }
    return sigma2 + sigma2 * theta1 * (s1_eff - sigma2) / denom;
}

}  // namespace detail

/// Effective conductivity along the given axis: compute K, solve the
/// matching equation, and evaluate
/// sigma2 + sigma2 theta1 (sigma1|A1|^{p-2} - sigma2) /
///          (sigma2 + (sigma1|A1|^{p-2} - sigma2) K).
/// The other axes follow by substituting their depolarization factors.
template <typename Scalar>
Scalar effective_conductivity(const EllipsoidSpec<Scalar>& spec, const MaterialPair<Scalar>& mat,
                              int axis) {
    const Scalar k = k_factor(spec, axis);
    const Scalar theta1 = volume_fraction(spec);
    const auto sol = solve_matching(
        MatchingProblem<Scalar>::make(mat.sigma1, mat.sigma2, mat.E, k, mat.p));
    const Scalar s1_eff = core_effective_sigma(mat, sol.a1);
    return detail::effective_from_k_theta(mat.sigma2, s1_eff, theta1, k);
}

/// All three axes at once, with the per-axis roots and coefficients.
template <typename Scalar>
EffectiveResult<Scalar> effective_conductivity_all(const EllipsoidSpec<Scalar>& spec,
                                                   const MaterialPair<Scalar>& mat) {
    EffectiveResult<Scalar> out;
    out.theta1 = volume_fraction(spec);
    for (int axis = 0; axis < 3; ++axis) {
        const Scalar k = k_factor(spec, axis);
        const auto sol = solve_matching(
            MatchingProblem<Scalar>::make(mat.sigma1, mat.sigma2, mat.E, k, mat.p));
        out.k_per_axis[axis] = k;
        out.x0_per_axis[axis] = sol.x0;
        out.a1_per_axis[axis] = sol.a1;
        out.sigma_star[axis] = detail::effective_from_k_theta(
            mat.sigma2, core_effective_sigma(mat, sol.a1), out.theta1, k);
    }
    return out;
}

/// p = 2 closed form: no root solve, sigma* depends only on the linear
/// contrast and K.
template <typename Scalar>
Scalar effective_conductivity_p2(const EllipsoidSpec<Scalar>& spec,
                                 const MaterialPair<Scalar>& mat, int axis) {
    if (mat.p != Scalar(2))
        throw std::invalid_argument("effective_conductivity_p2: materials do not have p = 2");
    const Scalar k = k_factor(spec, axis);
    const Scalar theta1 = volume_fraction(spec);
    return detail::effective_from_k_theta(mat.sigma2, mat.sigma1, theta1, k);
}

/// Coated-sphere specialization: theta1 = (r_c/r_e)^3, all depolarization
/// factors 1/3, K = theta2/3.  For p = 2 this is the Hashin-Shtrikman
/// formula.
template <typename Scalar>
Scalar effective_conductivity_sphere(Scalar r_core, Scalar r_exterior,
                                     const MaterialPair<Scalar>& mat) {
    if (!(r_core > Scalar(0)) || !(r_core < r_exterior))
        throw std::invalid_argument("effective_conductivity_sphere: need 0 < r_core < r_exterior");
    const Scalar ratio = r_core / r_exterior;
    const Scalar theta1 = ratio * ratio * ratio;
    const Scalar theta2 = Scalar(1) - theta1;
    const Scalar k = theta2 / Scalar(3);
    const auto sol = solve_matching(
        MatchingProblem<Scalar>::make(mat.sigma1, mat.sigma2, mat.E, k, mat.p));
    const Scalar s1_eff = core_effective_sigma(mat, sol.a1);
    const Scalar denom = Scalar(3) * mat.sigma2 + theta2 * (s1_eff - mat.sigma2);
    if (denom == Scalar(0))
        throw std::domain_error("effective_conductivity_sphere: singular denominator");
    return mat.sigma2 + Scalar(3) * mat.sigma2 * theta1 * (s1_eff - mat.sigma2) / denom;
}

template <typename Scalar>
struct ScaleInvarianceReport {
    Array3<Scalar> sigma_reference;
    Array3<Scalar> sigma_scaled;
    Scalar max_rel_diff;
    bool ok;
};

/// Geometrically similar prototype: both families of semi-axes scale by
/// lambda under c -> lambda c, rho -> lambda^2 rho, so theta1 and K are
/// unchanged.
template <typename Scalar>
EllipsoidSpec<Scalar> scaled_spec(const EllipsoidSpec<Scalar>& spec, Scalar lambda) {
    if (!(lambda > Scalar(0))) throw std::invalid_argument("scaled_spec: lambda must be positive");
    return EllipsoidSpec<Scalar>::make(Array3<Scalar>(spec.c * lambda),
                                       spec.rho_c * lambda * lambda,
                                       spec.rho_e * lambda * lambda);
}

/// Checks that per-axis sigma* is unchanged (to 1e-12 relative) when the
/// prototype is scaled by lambda.
template <typename Scalar>
ScaleInvarianceReport<Scalar> scale_invariance_check(const EllipsoidSpec<Scalar>& spec,
                                                     const MaterialPair<Scalar>& mat,
                                                     Scalar lambda) {
    ScaleInvarianceReport<Scalar> report;
    report.sigma_reference = effective_conductivity_all(spec, mat).sigma_star;
    report.sigma_scaled = effective_conductivity_all(scaled_spec(spec, lambda), mat).sigma_star;
    report.max_rel_diff =
        ((report.sigma_reference - report.sigma_scaled) / report.sigma_reference)
            .abs()
            .maxCoeff();
    report.ok = report.max_rel_diff <= Scalar(1e-12);
    return report;
}

}  // namespace neutral
