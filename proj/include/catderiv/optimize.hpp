#pragma once

#include <algorithm>
#include <cmath>

namespace catderiv {

struct Argmax {
    double xi = 0.0;
    double value = 0.0;
};

/// Golden-section search for a maximum of f on [lo, hi]; the bracket ends
/// themselves are never evaluated.
template <class F>
Argmax golden_section_max(F&& f, double lo, double hi, double width) {
    constexpr double r = 0.6180339887498949;
    double a = lo, b = hi;
    double x1 = b - r * (b - a), x2 = a + r * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > width) {
        if (f1 >= f2) {  // keep the left part on ties
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        }
    }
    return f1 >= f2 ? Argmax{x1, f1} : Argmax{x2, f2};
}

/// Scan n+1 equispaced candidates on [0,1] (first maximizer wins), then refine
/// by golden section inside the neighbouring cells. The refined point replaces
/// the grid point only if strictly better.
template <class F>
Argmax maximize_on_grid(F&& f, int n, double width = 1e-6) {
    int kbest = 0;
    double best = f(0.0);
    for (int k = 1; k <= n; ++k) {
        const double v = f(static_cast<double>(k) / n);
        if (v > best) {
            best = v;
            kbest = k;
        }
    }
    Argmax out{static_cast<double>(kbest) / n, best};
    const double lo = static_cast<double>(std::max(kbest - 1, 0)) / n;
    const double hi = static_cast<double>(std::min(kbest + 1, n)) / n;
    const Argmax g = golden_section_max(f, lo, hi, width);
    if (g.value > out.value) out = g;
    return out;
}

}  // namespace catderiv
