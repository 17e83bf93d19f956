#pragma once

#include "neutral/core.hpp"

#include <cmath>
#include <limits>

namespace neutral {

/// Inputs of the scalar interface-matching equation.  The geometry only
/// enters through the scale-free factor K.
template <typename Scalar>
struct MatchingProblem {
    Scalar sigma1;  // core coefficient
    Scalar sigma2;  // coating conductivity
    Scalar E;       // applied field magnitude (signed)
    Scalar K;       // geometric factor, in (0, 1)
    Scalar p;       // nonlinearity exponent, > 1

    static MatchingProblem make(Scalar sigma1, Scalar sigma2, Scalar E, Scalar K, Scalar p) {
        if (!(sigma1 > Scalar(0)) || !(sigma2 > Scalar(0)))
            throw std::invalid_argument("MatchingProblem: conductivities must be positive");
        if (!(p > Scalar(1))) throw std::invalid_argument("MatchingProblem: need p > 1");
        if (!(K > Scalar(0)) || !(K < Scalar(1)))
            throw std::invalid_argument("MatchingProblem: need 0 < K < 1");
        return MatchingProblem{sigma1, sigma2, E, K, p};
    }
};

template <typename Scalar>
struct MatchingSolution {
    Scalar x0;        // unique root of f
    Scalar a1;        // core field coefficient, E - K*x0
    Scalar a2;        // coating constant; equals a1
    Scalar residual;  // |f(x0)|
};

/// f(x) = sigma1 |E-Kx|^{p-2}(E-Kx) - sigma2 (E-Kx) - sigma2 x.
/// Strictly decreasing in x for every valid problem, with a single
/// kink at x = E/K when p < 2.
template <typename Scalar>
Scalar matching_f(const MatchingProblem<Scalar>& prob, Scalar x) {
    const Scalar t = prob.E - prob.K * x;
    return prob.sigma1 * signed_power(t, prob.p - Scalar(1)) - prob.sigma2 * t -
           prob.sigma2 * x;
}

/// f'(x) = -K sigma1 (p-1)|E-Kx|^{p-2} + sigma2 (K-1), where f is
/// differentiable; -inf at the kink for p < 2.
template <typename Scalar>
Scalar matching_df(const MatchingProblem<Scalar>& prob, Scalar x) {
    using std::abs;
    using std::pow;
    const Scalar t = prob.E - prob.K * x;
    Scalar tp;
    if (t == Scalar(0)) {
        if (prob.p > Scalar(2))
            tp = Scalar(0);
        else if (prob.p == Scalar(2))
            tp = Scalar(1);
        else
            return -std::numeric_limits<Scalar>::infinity();
    } else {
        tp = pow(abs(t), prob.p - Scalar(2));
    }
    return -prob.K * prob.sigma1 * (prob.p - Scalar(1)) * tp +
           prob.sigma2 * (prob.K - Scalar(1));
}

/// Natural magnitude of f values; residuals are judged against it.
template <typename Scalar>
Scalar matching_scale(const MatchingProblem<Scalar>& prob) {
    using std::abs;
    using std::pow;
    return std::max({prob.sigma1 * pow(abs(prob.E), prob.p - Scalar(1)),
                     prob.sigma2 * abs(prob.E), Scalar(1)});
}

/// Root of the p = 2 linear specialization,
/// x = E (sigma1-sigma2) / (K (sigma1-sigma2) + sigma2).
template <typename Scalar>
Scalar closed_form_root_p2(const MatchingProblem<Scalar>& prob) {
    if (prob.p != Scalar(2))
        throw std::invalid_argument("closed_form_root_p2: problem does not have p = 2");
    const Scalar ds = prob.sigma1 - prob.sigma2;
    return prob.E * ds / (prob.K * ds + prob.sigma2);
}

/// Unique root of f by bracket expansion + bisection, then a Newton
/// polish kept away from the p < 2 kink.  Bisection alone is already
/// convergent since f is strictly decreasing with f(-inf) = +inf and
/// f(+inf) = -inf.
template <typename Scalar>
MatchingSolution<Scalar> solve_matching(const MatchingProblem<Scalar>& prob) {
    using std::abs;

    if (prob.E == Scalar(0)) {
        if (prob.p < Scalar(2))
            throw std::invalid_argument(
                "solve_matching: E = 0 with p < 2 is singular (|A1|^{p-2} downstream)");
        return {Scalar(0), Scalar(0), Scalar(0), Scalar(0)};
    }

    // f is odd under (E, x) -> (-E, -x); canonicalizing the sign makes
    // that symmetry exact in the computed roots as well.
    if (prob.E < Scalar(0)) {
        MatchingProblem<Scalar> mirrored = prob;
        mirrored.E = -prob.E;
        MatchingSolution<Scalar> sol = solve_matching(mirrored);
        return {-sol.x0, -sol.a1, -sol.a2, sol.residual};
    }

    const Scalar kink = prob.E / prob.K;
    const Scalar x_scale = std::max(Scalar(1), abs(kink));

    Scalar lo = std::min(Scalar(0), kink) - Scalar(1);
    Scalar hi = std::max(Scalar(0), kink) + Scalar(1);
    Scalar step = x_scale;
    for (int i = 0; matching_f(prob, lo) <= Scalar(0); ++i) {
        if (i > 200) throw ConvergenceError("solve_matching: bracket expansion failed (low side)");
        lo -= step;
        step *= Scalar(2);
    }
    step = x_scale;
    for (int i = 0; matching_f(prob, hi) >= Scalar(0); ++i) {
        if (i > 200) throw ConvergenceError("solve_matching: bracket expansion failed (high side)");
        hi += step;
        step *= Scalar(2);
    }

    // f(lo) > 0 > f(hi); bisect to width 1e-14 * scale.
    const Scalar width_target = Scalar(1e-14) * x_scale;
    while (hi - lo > width_target) {
        const Scalar mid = (lo + hi) / Scalar(2);
        if (!(mid > lo && mid < hi)) break;
        if (matching_f(prob, mid) > Scalar(0))
            lo = mid;
        else
            hi = mid;
    }

    Scalar x = (lo + hi) / Scalar(2);
    for (int iter = 0; iter < 8; ++iter) {
        const Scalar fx = matching_f(prob, x);
        const Scalar dfx = matching_df(prob, x);
        if (!std::isfinite(dfx) || !(dfx < Scalar(0))) break;
        const Scalar next = x - fx / dfx;
        if (!(next >= lo && next <= hi)) break;
        // For p < 2 the derivative blows up at the kink; a step across
        // it invalidates the local model.
        if (prob.p < Scalar(2) && (x - kink) * (next - kink) < Scalar(0)) break;
        const bool done = abs(next - x) <= std::numeric_limits<Scalar>::epsilon() * abs(next);
        x = next;
        if (done) break;
    }

    // Monotone sign pattern around the root.
    const Scalar delta = std::max(Scalar(1e-7) * x_scale, abs(x) * Scalar(1e-9));
    if (!(matching_f(prob, x - delta) > Scalar(0)) || !(matching_f(prob, x + delta) < Scalar(0)))
        throw ConvergenceError("solve_matching: sign pattern around root failed");

    const Scalar a1 = prob.E - prob.K * x;
    return {x, a1, a1, abs(matching_f(prob, x))};
}

}  // namespace neutral
