#include "doctest.h"

#include <cmath>
#include <limits>

#include "folopt/flow.hpp"
#include "folopt/params.hpp"
#include "folopt/riccati.hpp"
#include "folopt/rng.hpp"

using namespace folopt;

namespace {

ModelParams table1(double cs = 1.0) {
    ModelParams p;
    p.cs = cs;
    return p;
}

// Independent high-precision references for the Table-1 constants,
// frozen from the transit-time log formula evaluated in extended
// precision.
constexpr double kExitZeroW = 1.1609095769128111;      // e(0, u == 0.5)
constexpr double kExitZeroFull = 0.34009750494728801;  // e(0, u == 1)
constexpr double kAsymptotic = 12.081382302676827;     // ybar
constexpr double kRootPlusW = 6.1325456951910032;      // y+ at u = 0.5
constexpr double kRootMinusW = -0.18654569519100325;   // y- at u = 0.5
constexpr double kControlFloor = 0.48886474741988050;  // ys^2 / b(ys)
constexpr double kExitFromOneW = 0.83995622865569166;  // e(1, u == 0.5)
constexpr double kExitFromThreeW = 0.60548471155288041;

StepControl random_step_control(const ModelParams& p, Rng& rng, int max_segments = 8) {
    const int nseg = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_segments)));
    std::vector<double> times{p.t0};
    for (int i = 1; i < nseg; ++i) times.push_back(rng.uniform(p.t0, p.t1));
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    std::vector<double> values;
    for (std::size_t i = 0; i < times.size(); ++i) values.push_back(rng.uniform(p.w, 1.0));
    return StepControl(times, values);
}

}  // namespace

TEST_CASE("velocity and gain functions") {
    const ModelParams p = table1(0.8);
    CHECK(p.velocity_a(0.0) == 0.0);
    CHECK(p.velocity_a(6.0) == -36.0);
    CHECK(p.velocity_b(0.0) == doctest::Approx(2.288).epsilon(1e-15));
    CHECK(p.velocity_b(6.0) == doctest::Approx(73.64).epsilon(1e-15));

    ModelParams flat;
    flat.c1 = 0.0;  // not admissible as a model, but b stays evaluable
    flat.c2 = 1.0;
    CHECK(flat.velocity_b(1.0) == 1.0);

    CHECK(p.gain_c(p.ys - 1e-12) == p.cs);
    CHECK(p.gain_c(p.ys) == 0.0);  // half-open interval [0, ys)
    CHECK(p.gain_c(2.0 * p.ys) == 0.0);
}

TEST_CASE("asymptotic maturity") {
    ModelParams unit;
    unit.c1 = 0.0;
    unit.c2 = 1.0;
    CHECK(unit.asymptotic_maturity() == doctest::Approx(1.0).epsilon(1e-15));

    const ModelParams p = table1();
    const double ybar = p.asymptotic_maturity();
    CHECK(ybar == doctest::Approx(kAsymptotic).epsilon(1e-15));
    // Defining identity a(ybar) + b(ybar) = 0 to machine precision.
    CHECK(std::abs(p.velocity(ybar, 1.0)) < 1e-12 * ybar * ybar);
}

TEST_CASE("riccati segment roots and transit times") {
    const ModelParams p = table1();
    const RiccatiSegment half(p, 0.5);
    CHECK(half.y_plus == doctest::Approx(kRootPlusW).epsilon(1e-15));
    CHECK(half.y_minus == doctest::Approx(kRootMinusW).epsilon(1e-15));
    CHECK(half.transit_time(0.0, p.ys) == doctest::Approx(kExitZeroW).epsilon(1e-14));

    const RiccatiSegment full(p, 1.0);
    CHECK(full.transit_time(0.0, p.ys) == doctest::Approx(kExitZeroFull).epsilon(1e-14));
    CHECK(full.y_plus == doctest::Approx(kAsymptotic).epsilon(1e-15));

    // Unreachable targets.
    CHECK(std::isinf(half.transit_time(0.0, half.y_plus + 0.1)));
    CHECK(std::isinf(half.transit_time(3.0, 1.0)));
    // Decreasing branch: from above the attractor down toward it.
    const double tau = half.transit_time(8.0, 7.0);
    CHECK(tau > 0.0);
    CHECK(half.advance(8.0, tau) == doctest::Approx(7.0).epsilon(1e-12));
}

TEST_CASE("riccati integral matches quadrature of the flow") {
    const ModelParams p = table1();
    const RiccatiSegment seg(p, 0.7);
    const double y0 = 1.3, dt = 0.9;
    // Rectangle-sum reference.
    double acc = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) acc += seg.advance(y0, (i + 0.5) * dt / n) * (dt / n);
    CHECK(seg.integral(y0, dt) == doctest::Approx(acc).epsilon(1e-9));
}

TEST_CASE("maturation flow basics") {
    const ModelParams p = table1();
    Rng rng(7101);
    for (int trial = 0; trial < 10; ++trial) {
        const StepControl u = random_step_control(p, rng);
        const double y0 = rng.uniform(0.0, p.ys);
        CHECK(maturation_flow(p, p.t0, y0, u) == y0);
    }

    const double ybar = p.asymptotic_maturity();
    const StepControl one = StepControl::constant(1.0, p.t0);
    for (double t : {0.3, 2.0, 17.0})
        CHECK(maturation_flow(p, t, ybar, one) == ybar);  // equilibrium is exact

    const StepControl w = StepControl::constant(p.w, p.t0);
    CHECK(maturation_flow(p, p.t0 + kExitZeroW, 0.0, w) == doctest::Approx(p.ys).epsilon(1e-12));
    // The rounded-exit-time form of the same statement.
    CHECK(std::abs(maturation_flow(p, p.t0 + 1.1609, 0.0, w) - p.ys) < 1e-4);

    CHECK_THROWS_AS((void)maturation_flow(p, 1.0, -0.5, w), std::domain_error);
    CHECK_THROWS_AS((void)maturation_flow(p, 1.0, ybar + 1e-6, w), std::domain_error);
}

TEST_CASE("exit time closed form and sentinel") {
    const ModelParams p = table1();
    const StepControl w = StepControl::constant(p.w, p.t0);
    const StepControl one = StepControl::constant(1.0, p.t0);

    CHECK(exit_time(p, p.ys, w) == p.t0);
    CHECK(exit_time(p, 0.0, w) == doctest::Approx(kExitZeroW).epsilon(1e-14));
    CHECK(exit_time(p, 0.0, one) == doctest::Approx(kExitZeroFull).epsilon(1e-14));
    CHECK(exit_time(p, 1.0, w) == doctest::Approx(kExitFromOneW).epsilon(1e-14));
    CHECK(exit_time(p, 3.0, w) == doctest::Approx(kExitFromThreeW).epsilon(1e-14));

    ModelParams short_horizon = p;
    short_horizon.t1 = 0.5;  // below the transit time under u = w
    const StepControl ws = StepControl::constant(p.w, short_horizon.t0);
    CHECK(exit_time(short_horizon, 0.0, ws) == short_horizon.t1 + 1.0);

    CHECK_THROWS_AS((void)exit_time(p, p.ys + 0.1, w), std::domain_error);
}

TEST_CASE("closed form agrees with adaptive integrator") {
    const ModelParams p = table1();
    const double ybar = p.asymptotic_maturity();
    Rng rng(90210);
    for (int trial = 0; trial < 25; ++trial) {
        const StepControl u = random_step_control(p, rng);
        const double y0 = rng.uniform(0.0, ybar);
        const double t = rng.uniform(p.t0, p.t1);
        const double closed = maturation_flow(p, t, y0, u);
        const double ode = maturation_flow_ode(p, t, y0, u);
        CHECK(std::abs(closed - ode) < 1e-9);
    }
}

TEST_CASE("flow comparison principle and invariance") {
    const ModelParams p = table1();
    Rng rng(5150);
    for (int trial = 0; trial < 20; ++trial) {
        const StepControl u = random_step_control(p, rng);
        // Pointwise-larger control on the same breakpoints.
        std::vector<double> bumped;
        for (double v : u.values()) bumped.push_back(v + (1.0 - v) * rng.next_double());
        const StepControl v(u.breakpoints(), bumped);
        const double y0 = rng.uniform(0.0, p.ys);
        const double t = rng.uniform(p.t0, p.t1);
        const double lo = maturation_flow(p, t, y0, u);
        const double hi = maturation_flow(p, t, y0, v);
        CHECK(lo <= hi + 1e-12);

        // Forward invariance on [0, ys]: the flow never backs below y0
        // and stays strictly below the asymptotic maturity.
        CHECK(lo >= y0 - 1e-12);
        CHECK(lo < p.asymptotic_maturity());
    }
}

TEST_CASE("exit time monotonicity") {
    const ModelParams p = table1();
    Rng rng(424242);
    const StepControl w = StepControl::constant(p.w, p.t0);
    for (int trial = 0; trial < 20; ++trial) {
        const StepControl u = random_step_control(p, rng);
        const double a = rng.uniform(0.0, p.ys - 0.2);
        const double b = rng.uniform(a + 0.1, p.ys);
        CHECK(exit_time(p, b, u) < exit_time(p, a, u));

        // u == w is the slowest admissible maturation.
        CHECK(exit_time(p, 0.0, w) >= exit_time(p, 0.0, u) - 1e-12);

        std::vector<double> bumped;
        for (double v : u.values()) bumped.push_back(v + (1.0 - v) * 0.3);
        const StepControl faster(u.breakpoints(), bumped);
        CHECK(exit_time(p, a, faster) < exit_time(p, a, u) + 1e-12);
    }
}

TEST_CASE("parameter validation and theorem flags") {
    ModelParams p = table1(7.0);
    const ParamsReport r = validate(p);
    REQUIRE(r.valid);
    CHECK(r.control_floor == doctest::Approx(kControlFloor).epsilon(1e-15));
    CHECK(r.margin_2ys_c1 == doctest::Approx(0.108).epsilon(1e-12));
    CHECK(r.cs_floor == doctest::Approx(6.2733333333333333).epsilon(1e-15));
    CHECK(r.exit_time_zero == doctest::Approx(kExitZeroW).epsilon(1e-14));
    CHECK(r.horizon_covers_exit);
    CHECK(r.theorem_conditions);  // cs = 7 > 6.2733...

    ModelParams low = table1(1.0);
    CHECK_FALSE(validate(low).theorem_conditions);  // cs below the floor

    ModelParams bad_w = table1(7.0);
    bad_w.w = 0.4;  // below ys^2/b(ys) = 0.4889
    const ParamsReport rb = validate(bad_w);
    CHECK_FALSE(rb.valid);
    CHECK_THROWS_AS(require_valid(bad_w), std::invalid_argument);

    ModelParams bad_t = table1(1.0);
    bad_t.t1 = bad_t.t0;
    CHECK_FALSE(validate(bad_t).valid);

    ModelParams cs0 = table1(0.0);  // degenerate no-gain model is allowed
    CHECK(validate(cs0).valid);
    CHECK_FALSE(validate(cs0).theorem_conditions);
}

TEST_CASE("control construction and admissibility") {
    const ModelParams p = table1();
    const StepControl bb = StepControl::bang_bang(p, 2.0);
    CHECK(bb(p.t0) == p.w);
    CHECK(bb(2.0 - 1e-12) == p.w);
    CHECK(bb(2.0) == 1.0);  // right-continuous
    CHECK(bb(p.t1) == 1.0);

    CHECK(StepControl::bang_bang(p, p.t0).segments() == 1);  // u == 1
    CHECK(StepControl::bang_bang(p, p.t1)(5.0) == p.w);      // u == w

    CHECK_THROWS_AS(StepControl({0.0, 0.0}, {0.5, 1.0}), std::invalid_argument);
    const StepControl outside({p.t0}, {0.3});
    CHECK_THROWS_AS(require_admissible(p, outside), std::invalid_argument);
}
