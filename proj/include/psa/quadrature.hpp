#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>

namespace psa {

// Adaptive Simpson integration on [a, b]. The integrands here (densities,
// log ratios) are smooth, so Simpson with interval halving is adequate.
namespace detail {

template <class F>
double simpson_step(F&& f, double a, double fa, double b, double fb, double m, double fm) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

template <class F>
double adapt(F&& f, double a, double fa, double b, double fb, double m, double fm,
             double whole, double tol, int depth) {
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = simpson_step(f, a, fa, m, fm, lm, flm);
    const double right = simpson_step(f, m, fm, b, fb, rm, frm);
    const double delta = left + right - whole;
    if (depth <= 0) return left + right + delta / 15.0;
    if (std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return adapt(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
           adapt(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

template <class F>
double integrate(F&& f, double a, double b, double tol = 1e-11) {
    if (!(b > a)) return 0.0;
    // Split into a few panels first so narrow features are not missed by the
    // initial Simpson estimate.
    const int panels = 16;
    double total = 0.0;
    const double h = (b - a) / panels;
    for (int i = 0; i < panels; ++i) {
        const double x0 = a + i * h;
        const double x1 = (i + 1 == panels) ? b : x0 + h;
        const double m = 0.5 * (x0 + x1);
        const double f0 = f(x0), f1 = f(x1), fm = f(m);
        const double whole = detail::simpson_step(f, x0, f0, x1, f1, m, fm);
        total += detail::adapt(f, x0, f0, x1, f1, m, fm, whole, tol / panels, 48);
    }
    return total;
}

}  // namespace psa
