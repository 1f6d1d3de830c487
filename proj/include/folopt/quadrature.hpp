#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace folopt {

/// Gauss-Legendre rule on [-1, 1]; nodes by Newton iteration on the
/// Legendre polynomial (symmetric, converges in a handful of steps).
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;

    explicit GaussRule(std::size_t n) {
        if (n == 0) throw std::invalid_argument("GaussRule: n must be positive");
        nodes.resize(n);
        weights.resize(n);
        for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
            double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                                (static_cast<double>(n) + 0.5));
            double dp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = x;
                if (n == 1) p1 = x;
                for (std::size_t k = 2; k <= n; ++k) {
                    const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = pk;
                }
                const double pn = n == 1 ? x : p1;
                const double pm = n == 1 ? 1.0 : p0;
                dp = n * (x * pn - pm) / (x * x - 1.0);
                const double dx = pn / dp;
                x -= dx;
                if (std::abs(dx) < 1e-16) break;
            }
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            const double wgt = 2.0 / ((1.0 - x * x) * dp * dp);
            weights[i] = wgt;
            weights[n - 1 - i] = wgt;
        }
    }

    /// Integrate f over [a, b].
    template <class Fn>
    double apply(double a, double b, Fn&& f) const {
        const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        double s = 0.0;
        for (std::size_t i = 0; i < nodes.size(); ++i)
            s += weights[i] * f(mid + half * nodes[i]);
        return s * half;
    }
};

/// Composite 20-point Gauss on subintervals of length at most `max_len`;
/// plenty for the smooth analytic integrands that arise here.
template <class Fn>
double integrate_smooth(double a, double b, Fn&& f, double max_len = 0.5) {
    static const GaussRule rule(20);
    if (b <= a) return 0.0;
    const int pieces = std::max(1, static_cast<int>(std::ceil((b - a) / max_len)));
    double s = 0.0;
    for (int i = 0; i < pieces; ++i) {
        const double lo = a + (b - a) * i / pieces;
        const double hi = a + (b - a) * (i + 1) / pieces;
        s += rule.apply(lo, hi, f);
    }
    return s;
}

}  // namespace folopt
