#pragma once

#include <cmath>
#include <limits>

#include "folopt/params.hpp"

namespace folopt {

/// Closed-form solution of the constant-control maturation ODE
///
///     dy/dt = a(y) + b(y)*u = -(y - y_plus)(y - y_minus),
///
/// where y_minus < 0 < y_plus are the roots of y^2 - c1*u*y - c2*u = 0.
/// Trajectories approach y_plus monotonically from either side.  The
/// logistic-type solution is expressed through
///
///     phi(y) = (y - y_plus)/(y - y_minus),   phi(y(t)) = phi(y0) e^{-r t},
///
/// with r = y_plus - y_minus, which also yields a log formula for the
/// time needed to move between two maturities.
struct RiccatiSegment {
    double u = 1.0;
    double y_plus = 0.0;
    double y_minus = 0.0;
    double rate = 0.0;  ///< y_plus - y_minus

    RiccatiSegment() = default;

    RiccatiSegment(const ModelParams& p, double control) : u(control) {
        const double cu = p.c1 * control;
        const double s = std::sqrt(cu * cu + 4.0 * p.c2 * control);
        y_plus = 0.5 * (cu + s);
        // Vieta: y_plus * y_minus = -c2*u.  Avoids cancellation.
        y_minus = -p.c2 * control / y_plus;
        rate = y_plus - y_minus;
    }

    /// State after time dt >= 0 starting from maturity y.
    double advance(double y, double dt) const {
        if (dt == 0.0) return y;
        const double phi = (y - y_plus) / (y - y_minus);
        const double e = phi * std::exp(-rate * dt);
        return (y_plus - y_minus * e) / (1.0 - e);
    }

    /// Time to move from y_from to y_to along the flow, or +inf when
    /// y_to is not reached forward in time (it lies past the attractor
    /// y_plus or behind the motion).
    double transit_time(double y_from, double y_to) const {
        if (y_to == y_from) return 0.0;
        const bool below = y_from < y_plus;
        const bool reachable = below ? (y_to > y_from && y_to < y_plus)
                                     : (y_to < y_from && y_to > y_plus);
        if (!reachable) return std::numeric_limits<double>::infinity();
        const double num = (y_to - y_minus) * (y_plus - y_from);
        const double den = (y_plus - y_to) * (y_from - y_minus);
        return std::log(num / den) / rate;
    }

    /// Integral of the maturity over the segment: int_0^dt y(s) ds.
    /// Follows from d/ds log(y - y_minus) = y_plus - y.
    double integral(double y, double dt) const {
        const double ye = advance(y, dt);
        return y_plus * dt - std::log((ye - y_minus) / (y - y_minus));
    }
};

}  // namespace folopt
