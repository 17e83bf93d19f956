// Independent oracles used by the unit and acceptance suites.  These
// deliberately avoid the library's primary evaluation paths: the
// depolarization oracle integrates the defining improper integral by
// adaptive quadrature, and the root oracle localizes the matching root
// by a dense sign scan before refining with plain bisection.
#pragma once

#include "neutral/core.hpp"
#include "neutral/matching.hpp"
#include "neutral/quadrature.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>

namespace oracles {

/// Depolarization factor in direction j from the defining integral,
/// with the substitution y = l_max^2 * t / (1 - t) handling [0, inf).
template <typename Scalar>
Scalar depolarization_quadrature(const neutral::Array3<Scalar>& l, int j) {
    const neutral::Array3<Scalar> l2 = l * l;
    auto integrand = [&l2, j](Scalar y) {
        using std::sqrt;
        return Scalar(1) / ((l2[j] + y) * sqrt((l2[0] + y) * (l2[1] + y) * (l2[2] + y)));
    };
    const Scalar result =
        neutral::integrate_zero_to_inf(integrand, l2.maxCoeff(), Scalar(1e-15), Scalar(1e-13))
            .value;
    return l.prod() / Scalar(2) * result;
}

struct GridScanResult {
    double root;
    int sign_changes;
};

/// Dense scan of f over [-span, span] (points+1 samples); every sign
/// change is counted, and the (expected unique) bracketing cell is
/// refined by bisection only.
inline GridScanResult grid_scan_root(const neutral::MatchingProblem<double>& prob, double span,
                                     int points) {
    const double h = 2.0 * span / points;
    double prev_x = -span;
    double prev_f = neutral::matching_f(prob, prev_x);
    int changes = 0;
    double lo = 0, hi = 0;
    for (int i = 1; i <= points; ++i) {
        const double x = -span + i * h;
        const double fx = neutral::matching_f(prob, x);
        if ((prev_f > 0 && fx <= 0) || (prev_f < 0 && fx >= 0)) {
            ++changes;
            lo = prev_x;
            hi = x;
        }
        prev_x = x;
        prev_f = fx;
    }
    if (changes != 1) return {std::numeric_limits<double>::quiet_NaN(), changes};

    double flo = neutral::matching_f(prob, lo);
    for (int it = 0; it < 200 && hi - lo > 1e-15 * (std::abs(lo) + std::abs(hi) + 1); ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fmid = neutral::matching_f(prob, mid);
        if ((flo > 0) == (fmid > 0)) {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    return {0.5 * (lo + hi), 1};
}

/// Prolate spheroid (l1 = a > l2 = l3 = b) closed form for the factor
/// along the long axis: ((1-e^2)/e^3)(artanh e - e), e^2 = 1 - b^2/a^2.
inline double prolate_long_axis_factor(double a, double b) {
    const double e = std::sqrt(1.0 - (b * b) / (a * a));
    return (1.0 - e * e) / (e * e * e) * (std::atanh(e) - e);
}

}  // namespace oracles
