#pragma once

#include "neutral/core.hpp"

#include <cmath>
#include <limits>

namespace neutral {

/// Carlson's degenerate symmetric elliptic integral
///
///   R_D(x, y, z) = (3/2) * integral_0^inf dt / ((t+z) sqrt((t+x)(t+y)(t+z)))
///
/// evaluated by the duplication algorithm (Carlson 1995).  Symmetric in
/// x and y.  Requires x, y >= 0 with at most one of them zero, z > 0.
/// The error tolerance is derived from the scalar's epsilon, so the
/// long double instantiation serves as an extended-precision oracle.
template <typename Scalar>
Scalar carlson_rd(Scalar x, Scalar y, Scalar z) {
    using std::abs;
    using std::pow;
    using std::sqrt;

    if (!(x >= Scalar(0)) || !(y >= Scalar(0)) || !(z > Scalar(0)) ||
        x + y == Scalar(0))
        throw std::domain_error("carlson_rd: arguments outside domain");

    // Duplication error shrinks like errtol^6.
    const Scalar errtol =
        pow(std::numeric_limits<Scalar>::epsilon() / Scalar(4), Scalar(1) / Scalar(6));

    Scalar xt = x, yt = y, zt = z;
    Scalar sum = Scalar(0);
    Scalar fac = Scalar(1);
    Scalar ave, dx, dy, dz;
    for (int iter = 0;; ++iter) {
        const Scalar sx = sqrt(xt), sy = sqrt(yt), sz = sqrt(zt);
        const Scalar lam = sx * (sy + sz) + sy * sz;
        sum += fac / (sz * (zt + lam));
        fac /= Scalar(4);
        xt = (xt + lam) / Scalar(4);
        yt = (yt + lam) / Scalar(4);
        zt = (zt + lam) / Scalar(4);
        ave = (xt + yt + Scalar(3) * zt) / Scalar(5);
        dx = (ave - xt) / ave;
        dy = (ave - yt) / ave;
        dz = (ave - zt) / ave;
        const Scalar dev = std::max({abs(dx), abs(dy), abs(dz)});
        if (dev < errtol) break;
        if (iter > 120) throw ConvergenceError("carlson_rd: duplication did not converge");
    }

    const Scalar ea = dx * dy;
    const Scalar eb = dz * dz;
    const Scalar ec = ea - eb;
    const Scalar ed = ea - Scalar(6) * eb;
    const Scalar ee = ed + ec + ec;
    const Scalar c1 = Scalar(3) / Scalar(14);
    const Scalar c2 = Scalar(1) / Scalar(6);
    const Scalar c3 = Scalar(9) / Scalar(22);
    const Scalar c4 = Scalar(3) / Scalar(26);
    const Scalar c5 = c3 / Scalar(4);
    const Scalar c6 = Scalar(3) * c4 / Scalar(2);

    const Scalar series =
        Scalar(1) + ed * (-c1 + c5 * ed - c6 * dz * ee) +
        dz * (c2 * ee + dz * (-c3 * ec + dz * c4 * ea));
    return Scalar(3) * sum + fac * series / (ave * sqrt(ave));
}

}  // namespace neutral
