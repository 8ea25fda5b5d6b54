#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

namespace qmix {

// Full Gauss-Legendre rule on [-1, 1].
struct GaussRule {
    std::vector<double> x;
    std::vector<double> w;
};

const GaussRule& gauss_rule();  // 20 points

// Composite Gauss-Legendre on [a, b] with n equal panels.
template <class F>
auto integrate_panels(F&& f, double a, double b, int n) -> decltype(f(a))
{
    using R = decltype(f(a));
    const GaussRule& g = gauss_rule();
    R total{};
    if (n < 1 || b == a) return total;
    double h = (b - a) / n;
    for (int p = 0; p < n; ++p) {
        double mid = a + (p + 0.5) * h, half = 0.5 * h;
        R part{};
        for (std::size_t i = 0; i < g.x.size(); ++i) part += g.w[i] * f(mid + half * g.x[i]);
        total += part * half;
    }
    return total;
}

// Panel count so that no panel is wider than width.
inline int panels_for(double a, double b, double width)
{
    return std::max(1, static_cast<int>(std::ceil(std::abs(b - a) / width)));
}

// PV of f(u)/(u - c) over [lo, hi]. Near the pole the integrand is replaced by
// (f(u) - f(c))/(u - c) on the symmetric window [c - half, c + half], whose log
// remainder vanishes by symmetry. The window is split into an even number of
// panels so no node lands on c. The window may extend past [lo, hi]; f is
// expected to be defined (and negligible) there.
template <class F>
double principal_value(F&& f, double c, double lo, double hi, double half, double panel)
{
    double fc = f(c);
    int n = panels_for(0.0, half, panel);
    auto smooth = [&](double u) {
        double du = u - c;
        return (f(u) - fc) / du;
    };
    double total = integrate_panels(smooth, c - half, c + half, 2 * n);
    auto plain = [&](double u) { return f(u) / (u - c); };
    double a = c - half, b = c + half;
    if (lo < a) total += integrate_panels(plain, lo, a, panels_for(lo, a, panel));
    if (hi > b) total += integrate_panels(plain, b, hi, panels_for(b, hi, panel));
    return total;
}

}  // namespace qmix
