#include "folopt/flow.hpp"

#include <cmath>
#include <stdexcept>

namespace folopt {

namespace {

void check_flow_domain(const ModelParams& p, double y0) {
    if (!(y0 >= 0.0) || y0 > p.asymptotic_maturity())
        throw std::domain_error("maturation_flow: y0 outside [0, asymptotic maturity]");
}

}  // namespace

double maturation_flow(const ModelParams& p, double t, double y0, const StepControl& u) {
    check_flow_domain(p, y0);
    double y = y0;
    double s = p.t0;
    for (std::size_t i = 0; i < u.segments() && s < t; ++i) {
        const double seg_end = i + 1 < u.segments() ? u.segment_start(i + 1) : t;
        if (seg_end <= s) continue;
        const double stop = std::min(seg_end, t);
        const RiccatiSegment ric(p, u.segment_value(i));
        y = ric.advance(y, stop - s);
        s = stop;
    }
    return y;
}

double maturation_flow_ode(const ModelParams& p, double t, double y0, const StepControl& u,
                           const OdeOptions& opt) {
    check_flow_domain(p, y0);
    auto rhs = [&](double s, const std::array<double, 1>& y, std::array<double, 1>& dy) {
        dy[0] = p.velocity(y[0], u(s));
    };
    auto sol = integrate<1>(rhs, p.t0, t, {y0}, opt, u.breakpoints_within(p.t0, t));
    return sol.y.back()[0];
}

double threshold_time(const ModelParams& p, double y0, const StepControl& u, double level) {
    if (!(y0 >= 0.0) || y0 > p.ys)
        throw std::domain_error("threshold_time: y0 outside [0, ys]");
    if (level < y0 || level > p.ys)
        throw std::domain_error("threshold_time: level outside [y0, ys]");
    if (y0 == level) return p.t0;
    double y = y0;
    double s = p.t0;
    for (std::size_t i = 0; i < u.segments() && s < p.t1; ++i) {
        const double seg_end = std::min(i + 1 < u.segments() ? u.segment_start(i + 1) : p.t1, p.t1);
        if (seg_end <= s) continue;
        const RiccatiSegment ric(p, u.segment_value(i));
        const double tau = ric.transit_time(y, level);
        if (s + tau <= seg_end) return s + tau;
        y = ric.advance(y, seg_end - s);
        s = seg_end;
    }
    return exit_sentinel(p);
}

double exit_time(const ModelParams& p, double y0, const StepControl& u) {
    return threshold_time(p, y0, u, p.ys);
}

double flow_integral(const ModelParams& p, double ta, double tb, double y0, const StepControl& u) {
    check_flow_domain(p, y0);
    if (tb < ta) return -flow_integral(p, tb, ta, y0, u);
    double acc = 0.0;
    double y = y0;
    double s = p.t0;
    for (std::size_t i = 0; i < u.segments() && s < tb; ++i) {
        const double seg_end = i + 1 < u.segments() ? u.segment_start(i + 1) : tb;
        if (seg_end <= s) continue;
        const double stop = std::min(seg_end, tb);
        const RiccatiSegment ric(p, u.segment_value(i));
        if (stop > ta) {
            const double lo = std::max(s, ta);
            const double y_lo = ric.advance(y, lo - s);
            acc += ric.integral(y_lo, stop - lo);
        }
        y = ric.advance(y, stop - s);
        s = stop;
    }
    return acc;
}

}  // namespace folopt
