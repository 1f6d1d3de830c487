#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "folopt/dirac.hpp"
#include "folopt/rng.hpp"

using namespace folopt;

namespace {

ModelParams table1(double cs = 1.0) {
    ModelParams p;
    p.cs = cs;
    return p;
}

constexpr double kExitZeroW = 1.1609095769128111;
constexpr double kCertifiedCost = -40865.139898671797;  // J at cs=7, switch at the exit

Ensemble single(double y0 = 0.0, double mass = 1.0) {
    Ensemble e;
    e.particles.push_back({0.0, y0, mass});
    return e;
}

Ensemble random_ensemble(const ModelParams& p, Rng& rng, int max_n = 10) {
    const int n = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_n)));
    std::vector<double> ys;
    for (int i = 0; i < n; ++i) ys.push_back(rng.uniform(0.0, p.ys));
    std::sort(ys.begin(), ys.end());
    Ensemble e;
    double prev = -1.0;
    for (double y : ys) {
        if (y - prev < 1e-6) continue;  // keep orderings strict
        e.particles.push_back({rng.next_double(), y, rng.uniform(0.1, 3.0)});
        prev = y;
    }
    if (e.particles.empty()) e.particles.push_back({0.0, ys[0], 1.0});
    return e;
}

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

TEST_CASE("ensemble validation") {
    const ModelParams p = table1();
    Ensemble bad = single(2.0);
    bad.particles.push_back({0.0, 2.0, 1.0});  // equal maturities
    CHECK_THROWS_AS(bad.validate(p), std::invalid_argument);

    Ensemble neg = single(1.0, -2.0);
    CHECK_THROWS_AS(neg.validate(p), std::invalid_argument);

    Ensemble high = single(p.ys + 0.5);
    CHECK_THROWS_AS(high.validate(p), std::invalid_argument);

    Ensemble ok = single(1.0);
    ok.particles.push_back({0.5, 2.0, 0.5});
    CHECK_NOTHROW(ok.validate(p));
}

TEST_CASE("weight growth freezes at the exit") {
    const ModelParams p = table1(1.0);
    const auto flow = simulate(p, single(), StepControl::constant(p.w, p.t0));
    const ParticlePath& q = flow.path(0);
    CHECK(q.exit_time() == doctest::Approx(kExitZeroW).epsilon(1e-14));
    CHECK(q.weight(q.exit_time()) == doctest::Approx(std::exp(kExitZeroW)).epsilon(1e-13));
    CHECK(q.weight(p.t1) == q.weight(q.exit_time()));
    CHECK(q.weight(17.0) == doctest::Approx(3.1928360857417247).epsilon(1e-13));
    // Age advances linearly, exactly.
    CHECK(q.age(3.25) == 3.25);
}

TEST_CASE("no proliferation at or above the threshold") {
    const ModelParams p = table1(2.0);
    const auto flow = simulate(p, single(p.ys, 1.7), StepControl::constant(0.8, p.t0));
    CHECK(flow.path(0).exit_time() == p.t0);
    CHECK(flow.path(0).weight(p.t1) == 1.7);
    CHECK(flow.path(0).maturity(p.t1) > p.ys);
}

TEST_CASE("faster control exits earlier and matures further") {
    const ModelParams p = table1(1.0);
    const auto slow = simulate(p, single(1.0), StepControl::constant(p.w, p.t0));
    const auto fast = simulate(p, single(1.0), StepControl::constant(1.0, p.t0));
    CHECK(fast.path(0).exit_time() < slow.path(0).exit_time());
    CHECK(fast.path(0).maturity(p.t1) > slow.path(0).maturity(p.t1));
}

TEST_CASE("terminal cost values") {
    // Near-zero horizon reduces to the initial moment.
    ModelParams p = table1(1.5);
    p.t1 = p.t0 + 1e-9;
    Ensemble e = single(1.0, 2.0);
    e.particles.push_back({0.3, 4.0, 0.7});
    const double j = cost(p, e, StepControl::constant(p.w, p.t0));
    CHECK(j == doctest::Approx(-(1.0 * 2.0 + 4.0 * 0.7)).epsilon(1e-7));

    // Switch exactly at the exit: two-stage closed-form composition.
    const ModelParams q = table1(7.0);
    const double j2 = cost(q, single(), StepControl::bang_bang(q, kExitZeroW));
    CHECK(j2 == doctest::Approx(kCertifiedCost).epsilon(1e-12));

    // No gain: mass is conserved and the cost is the weighted flow.
    const ModelParams q0 = table1(0.0);
    Rng rng(31);
    const StepControl u = random_step_control(q0, rng);
    Ensemble e2 = single(0.5, 1.1);
    e2.particles.push_back({0.1, 2.5, 0.4});
    const auto flow = simulate(q0, e2, u);
    double expect = 0.0;
    for (std::size_t k = 0; k < e2.particles.size(); ++k) {
        CHECK(flow.path(k).weight(q0.t1) == e2.particles[k].x3);
        expect -= maturation_flow(q0, q0.t1, e2.particles[k].x2, u) * e2.particles[k].x3;
    }
    CHECK(cost(flow) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("maturity moment") {
    const ModelParams p = table1(0.9);
    const auto flow = simulate(p, single(2.0, 1.3), StepControl::constant(0.7, p.t0));
    CHECK(flow.maturity_moment(p.t0) == doctest::Approx(2.0 * 1.3).epsilon(1e-15));
    CHECK(flow.maturity_moment(p.t1) == doctest::Approx(-cost(flow)).epsilon(1e-15));

    // Strictly increasing under u == 1 while below the asymptote.
    const auto one = simulate(p, single(1.0), StepControl::constant(1.0, p.t0));
    double prev = one.maturity_moment(p.t0);
    for (int i = 1; i <= 50; ++i) {
        const double t = p.t0 + (2.0 - p.t0) * i / 50.0;
        const double m = one.maturity_moment(t);
        CHECK(m > prev);
        prev = m;
    }
}

TEST_CASE("ordering is preserved along the flow") {
    const ModelParams p = table1(1.0);
    Rng rng(777);
    for (int trial = 0; trial < 10; ++trial) {
        const Ensemble e = random_ensemble(p, rng);
        const StepControl u = random_step_control(p, rng);
        const auto flow = simulate(p, e, u);
        // Strict early on; late times may tie at machine precision once
        // both particles have saturated onto the attracting root.
        for (std::size_t k = 1; k < flow.size(); ++k)
            CHECK(flow.path(k).maturity(p.t0 + 0.5) > flow.path(k - 1).maturity(p.t0 + 0.5));
        for (int i = 0; i <= 10; ++i) {
            const double t = p.t0 + (p.t1 - p.t0) * i / 10.0;
            for (std::size_t k = 1; k < flow.size(); ++k)
                CHECK(flow.path(k).maturity(t) >= flow.path(k - 1).maturity(t));
        }
        // Exit times are nonincreasing in the particle index.
        for (std::size_t k = 1; k < flow.size(); ++k)
            CHECK(flow.path(k).exit_time() <= flow.path(k - 1).exit_time());
    }
}

TEST_CASE("mass law holds to 1e-10") {
    const ModelParams p = table1(1.7);
    Rng rng(808);
    for (int trial = 0; trial < 10; ++trial) {
        const Ensemble e = random_ensemble(p, rng);
        const StepControl u = random_step_control(p, rng);
        const auto flow = simulate(p, e, u);
        for (std::size_t k = 0; k < flow.size(); ++k) {
            const auto& q = flow.path(k);
            for (int i = 0; i <= 8; ++i) {
                const double t = p.t0 + (p.t1 - p.t0) * i / 8.0;
                const double lhs = std::log(q.weight(t)) - std::log(q.initial().x3);
                const double rhs = p.cs * (std::min(t, q.exit_time()) - p.t0);
                CHECK(std::abs(lhs - rhs) < 1e-10);
            }
        }
    }
}

TEST_CASE("terminal and running-integral costs agree") {
    Rng rng(919);
    for (int trial = 0; trial < 8; ++trial) {
        const ModelParams p = table1(rng.uniform(0.0, 2.0));
        const Ensemble e = random_ensemble(p, rng);
        const StepControl u = random_step_control(p, rng);
        const auto flow = simulate(p, e, u);
        CHECK(std::abs(cost(flow) - cost_running_integral(flow)) < 1e-8);
    }
}

TEST_CASE("semi-analytic simulation matches the event-driven integrator") {
    Rng rng(5050);
    for (int trial = 0; trial < 10; ++trial) {
        const ModelParams p = table1(rng.uniform(0.0, 2.0));
        const Ensemble e = random_ensemble(p, rng);
        const StepControl u = random_step_control(p, rng);
        const auto flow = simulate(p, e, u);
        const auto ode = simulate_ode(p, e, u);
        for (std::size_t k = 0; k < flow.size(); ++k) {
            if (flow.path(k).exited())
                CHECK(std::abs(flow.path(k).exit_time() - ode.exit_times[k]) < 1e-9);
            for (int i = 0; i <= 6; ++i) {
                const double t = p.t0 + (p.t1 - p.t0) * i / 6.0;
                const auto a = flow.path(k).state(t);
                const auto b = ode.state(p, e, k, t);
                for (int c = 0; c < 3; ++c) CHECK(std::abs(a[c] - b[c]) < 1e-8);
            }
        }
    }
}

TEST_CASE("ensemble csv io") {
    const char* path = "test_ensemble_io.csv";
    {
        std::ofstream out(path);
        out << "x1,x2,x3\n0.0,0.0,1.0\n0.5,2.5,0.25\n";
    }
    const Ensemble e = read_ensemble_csv(path);
    REQUIRE(e.particles.size() == 2);
    CHECK(e.particles[1].x2 == 2.5);

    {
        std::ofstream out(path);
        out << "x1,x2,x3\n0.0,zero,1.0\n";
    }
    try {
        (void)read_ensemble_csv(path);
        FAIL("expected parse failure");
    } catch (const std::exception& ex) {
        CHECK(std::string(ex.what()).find(":2:") != std::string::npos);  // offending row
    }
    std::remove(path);
}
