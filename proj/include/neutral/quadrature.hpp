#pragma once

#include "neutral/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace neutral {

template <typename Scalar>
struct QuadratureResult {
    Scalar value = Scalar(0);
    Scalar error = Scalar(0);
    int panels = 0;
};

namespace detail {

// Gauss-Kronrod 7-15 panel (QUADPACK dqk15 abscissae/weights).
// xgk holds the positive Kronrod nodes, largest first; odd indices are
// also nodes of the embedded 7-point Gauss rule.
template <typename Scalar, typename F>
void gk15_panel(F&& f, Scalar a, Scalar b, Scalar& value, Scalar& error) {
    static const Scalar xgk[7] = {
        Scalar(0.99145537112081263921L), Scalar(0.94910791234275852453L),
        Scalar(0.86486442335976907279L), Scalar(0.74153118559939443986L),
        Scalar(0.58608723546769113029L), Scalar(0.40584515137739716691L),
        Scalar(0.20778495500789846760L)};
    static const Scalar wgk[8] = {
        Scalar(0.02293532201052922496L), Scalar(0.06309209262997855329L),
        Scalar(0.10479001032225018384L), Scalar(0.14065325971552591875L),
        Scalar(0.16900472663926790283L), Scalar(0.19035057806478540991L),
        Scalar(0.20443294007529889241L), Scalar(0.20948214108472782801L)};
    static const Scalar wg[4] = {
        Scalar(0.12948496616886969327L), Scalar(0.27970539148927666790L),
        Scalar(0.38183005050511894495L), Scalar(0.41795918367346938776L)};

    const Scalar center = (a + b) / Scalar(2);
    const Scalar halfwidth = (b - a) / Scalar(2);

    const Scalar fc = f(center);
    Scalar gauss = wg[3] * fc;
    Scalar kronrod = wgk[7] * fc;
    for (int i = 0; i < 7; ++i) {
        const Scalar dx = halfwidth * xgk[i];
        const Scalar fsum = f(center - dx) + f(center + dx);
        kronrod += wgk[i] * fsum;
        if (i % 2 == 1) gauss += wg[i / 2] * fsum;
    }
    value = kronrod * halfwidth;

    // |K15 - G7| overestimates the Kronrod error, usually by a lot; the
    // conservative choice buys extra subdivisions instead of optimism on
    // boundary-layer integrands.
    using std::abs;
    error = abs((kronrod - gauss) * halfwidth);
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod integration of f over [a, b].
/// Splits the worst panel until sum(err) <= max(abs_tol, rel_tol*|I|).
template <typename Scalar, typename F>
QuadratureResult<Scalar> integrate_adaptive(F&& f, Scalar a, Scalar b,
                                            Scalar abs_tol = Scalar(1e-13),
                                            Scalar rel_tol = Scalar(1e-11),
                                            int max_panels = 4000) {
    struct Panel {
        Scalar a, b, value, error;
    };
    std::vector<Panel> panels;
    panels.reserve(64);

    Panel first{a, b, Scalar(0), Scalar(0)};
    detail::gk15_panel(f, a, b, first.value, first.error);
    panels.push_back(first);

    using std::abs;
    while (true) {
        Scalar total = Scalar(0), err = Scalar(0);
        std::size_t worst = 0;
        for (std::size_t i = 0; i < panels.size(); ++i) {
            total += panels[i].value;
            err += panels[i].error;
            if (panels[i].error > panels[worst].error) worst = i;
        }
        if (err <= std::max(abs_tol, rel_tol * abs(total)))
            return {total, err, static_cast<int>(panels.size())};
        if (static_cast<int>(panels.size()) >= max_panels)
            throw ConvergenceError("adaptive quadrature: panel budget exhausted");

        const Panel p = panels[worst];
        const Scalar mid = (p.a + p.b) / Scalar(2);
        if (!(mid > p.a && mid < p.b))
            throw ConvergenceError("adaptive quadrature: interval collapsed below resolution");
        Panel left{p.a, mid, Scalar(0), Scalar(0)}, right{mid, p.b, Scalar(0), Scalar(0)};
        detail::gk15_panel(f, left.a, left.b, left.value, left.error);
        detail::gk15_panel(f, right.a, right.b, right.value, right.error);
        panels[worst] = left;
        panels.push_back(right);
    }
}

/// Integral of f over [0, inf) via the rational substitution
/// y = scale*t/(1-t), which maps [0,1) onto the half line.  No tail
/// truncation: the transformed integrand is evaluated on all of [0,1]
/// (the Kronrod nodes never touch the endpoints).
template <typename Scalar, typename F>
QuadratureResult<Scalar> integrate_zero_to_inf(F&& f, Scalar scale,
                                               Scalar abs_tol = Scalar(1e-13),
                                               Scalar rel_tol = Scalar(1e-11),
                                               int max_panels = 4000) {
    auto transformed = [&f, scale](Scalar t) -> Scalar {
        const Scalar om = Scalar(1) - t;
        const Scalar y = scale * t / om;
        const Scalar jac = scale / (om * om);
        const Scalar v = f(y) * jac;
        return std::isfinite(v) ? v : Scalar(0);
    };
    return integrate_adaptive(transformed, Scalar(0), Scalar(1), abs_tol, rel_tol, max_panels);
}

}  // namespace neutral
