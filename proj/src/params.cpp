#include "folopt/params.hpp"

#include <cstdio>
#include <stdexcept>

#include "folopt/control.hpp"
#include "folopt/flow.hpp"

namespace folopt {

ParamsReport validate(const ModelParams& p) {
    ParamsReport r;
    auto fail = [&](const std::string& msg) { r.errors.push_back(msg); };

    if (!(p.c1 > 0.0)) fail("c1 must be positive");
    if (!(p.c2 > 0.0)) fail("c2 must be positive");
    if (!(p.ys > 0.0)) fail("ys must be positive");
    // cs = 0 is admitted for the degenerate no-gain studies; the
    // switching theorem then simply does not apply.
    if (!(p.cs >= 0.0)) fail("cs must be nonnegative");
    if (!(p.t1 > p.t0)) fail("t1 must exceed t0");

    if (r.errors.empty()) {
        r.control_floor = p.control_floor();
        r.margin_2ys_c1 = 2.0 * p.ys - p.c1;
        r.cs_floor = p.cs_floor();
        if (!(r.control_floor < 1.0))
            fail("ys^2/(c1*ys+c2) must be below 1");
        if (!(p.w > r.control_floor && p.w < 1.0))
            fail("w must lie strictly between ys^2/(c1*ys+c2) and 1");
    }

    r.valid = r.errors.empty();
    if (r.valid) {
        r.exit_time_zero = exit_time(p, 0.0, StepControl::constant(p.w, p.t0));
        r.horizon_covers_exit = p.t1 > r.exit_time_zero;
        r.switching_conditions = r.margin_2ys_c1 > 0.0 && p.cs > r.cs_floor;
        r.theorem_conditions = r.switching_conditions && r.horizon_covers_exit;
    }
    return r;
}

void require_valid(const ModelParams& p) {
    const ParamsReport r = validate(p);
    if (r.valid) return;
    std::string msg = "invalid model parameters:";
    for (const auto& e : r.errors) msg += " " + e + ";";
    throw std::invalid_argument(msg);
}

std::string describe(const ParamsReport& r) {
    char buf[256];
    std::string out;
    auto line = [&](const char* fmt, auto... args) {
        if constexpr (sizeof...(args) == 0)
            std::snprintf(buf, sizeof(buf), "%s", fmt);
        else
            std::snprintf(buf, sizeof(buf), fmt, args...);
        out += buf;
        out += '\n';
    };
    line("valid: %s", r.valid ? "yes" : "no");
    for (const auto& e : r.errors) line("error: %s", e.c_str());
    if (!r.valid) return out;
    line("control floor ys^2/b(ys): %.17g", r.control_floor);
    line("margin 2*ys - c1: %.17g", r.margin_2ys_c1);
    line("cs floor (a(ys)+b(ys))/ys: %.17g", r.cs_floor);
    line("exit time from y0=0 under u=w: %.17g", r.exit_time_zero);
    line("horizon covers exit: %s", r.horizon_covers_exit ? "yes" : "no");
    line("theorem conditions: %s", r.theorem_conditions ? "satisfied" : "not satisfied");
    return out;
}

}  // namespace folopt
