#pragma once

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "folopt/params.hpp"

namespace folopt {

/// Right-continuous step control on [t0, t1].
///
/// `times[i]` is the start of the i-th segment; `values[i]` applies on
/// [times[i], times[i+1]) and the last value on [times.back(), t1].
/// The first breakpoint must be the domain start t0.  General measurable
/// controls are approximated by step functions; the optimizer only ever
/// needs the bang-bang family.
class StepControl {
public:
    StepControl(std::vector<double> times, std::vector<double> values)
        : times_(std::move(times)), values_(std::move(values)) {
        if (times_.empty() || times_.size() != values_.size())
            throw std::invalid_argument("StepControl: breakpoints and values must be nonempty and match");
        for (std::size_t i = 1; i < times_.size(); ++i)
            if (!(times_[i] > times_[i - 1]))
                throw std::invalid_argument("StepControl: breakpoints must be strictly increasing");
    }

    static StepControl constant(double u, double t0) {
        return StepControl({t0}, {u});
    }

    /// u = w on [t0, tstar), u = 1 on [tstar, t1].  Clamps tstar to the
    /// horizon: tstar <= t0 gives u == 1 and tstar >= t1 gives u == w.
    static StepControl bang_bang(const ModelParams& p, double tstar) {
        if (tstar <= p.t0) return constant(1.0, p.t0);
        if (tstar >= p.t1) return constant(p.w, p.t0);
        return StepControl({p.t0, tstar}, {p.w, 1.0});
    }

    /// Reverse family used as an optimizer sanity check: 1 then w.
    static StepControl bang_bang_reverse(const ModelParams& p, double tstar) {
        if (tstar <= p.t0) return constant(p.w, p.t0);
        if (tstar >= p.t1) return constant(1.0, p.t0);
        return StepControl({p.t0, tstar}, {1.0, p.w});
    }

    /// Right-continuous evaluation; clamped to the first segment before t0.
    double operator()(double t) const {
        auto it = std::upper_bound(times_.begin(), times_.end(), t);
        const std::size_t i = it == times_.begin() ? 0 : static_cast<std::size_t>(it - times_.begin() - 1);
        return values_[i];
    }

    std::size_t segments() const { return times_.size(); }
    double segment_start(std::size_t i) const { return times_[i]; }
    double segment_value(std::size_t i) const { return values_[i]; }
    const std::vector<double>& breakpoints() const { return times_; }
    const std::vector<double>& values() const { return values_; }

    /// Breakpoints strictly inside (a, b), ascending.
    std::vector<double> breakpoints_within(double a, double b) const {
        std::vector<double> out;
        for (double t : times_)
            if (t > a && t < b) out.push_back(t);
        return out;
    }

    double min_value() const { return *std::min_element(values_.begin(), values_.end()); }
    double max_value() const { return *std::max_element(values_.begin(), values_.end()); }

private:
    std::vector<double> times_;
    std::vector<double> values_;
};

/// Admissibility against a parameter set: domain starts at t0,
/// breakpoints stay below t1 and every value lies in [w, 1].
inline void require_admissible(const ModelParams& p, const StepControl& u) {
    if (u.segment_start(0) != p.t0)
        throw std::invalid_argument("control must start at t0");
    if (u.breakpoints().back() >= p.t1)
        throw std::invalid_argument("control breakpoints must lie below t1");
    for (double v : u.values())
        if (v < p.w || v > 1.0)
            throw std::invalid_argument("control value outside [w, 1]");
}

}  // namespace folopt
