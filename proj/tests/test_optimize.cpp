#include "doctest.h"

#include <cmath>

#include "folopt/adjoint.hpp"
#include "folopt/optimize.hpp"

using namespace folopt;

namespace {

ModelParams table1(double cs = 1.0) {
    ModelParams p;
    p.cs = cs;
    return p;
}

constexpr double kExitZeroW = 1.1609095769128111;

Ensemble single(double y0 = 0.0, double mass = 1.0) {
    Ensemble e;
    e.particles.push_back({0.0, y0, mass});
    return e;
}

Ensemble two_mass_default() {
    Ensemble e;
    e.particles.push_back({0.0, 1.0, 1.0});
    e.particles.push_back({0.5, 3.0, 10.0});
    return e;
}

}  // namespace

TEST_CASE("golden section recovers an analytic minimizer") {
    const double target = 3.14159265358979;
    double value = 0.0;
    const double x = golden_section([&](double t) { return (t - target) * (t - target); }, 0.0,
                                    17.0, 1e-9, &value);
    CHECK(std::abs(x - target) < 1e-8);
    CHECK(value < 1e-15);

    // Boundary minimum is found exactly.
    const double xb = golden_section([](double t) { return t; }, 2.0, 5.0, 1e-9, &value);
    CHECK(xb == 2.0);
}

TEST_CASE("refine on an injected symmetric cost reports tied candidates") {
    // Two segments with equal-depth minima at the shared boundary's two
    // sides; mirrors the tie-reporting contract without the model.
    SweepProblem prob;
    const double b = 8.0;
    prob.boundaries = {b};
    prob.cost_of_switch = [b](double t) {
        const double d = std::min(std::abs(t - 3.0), std::abs(t - 13.0));
        return d * d - 5.0;
    };
    prob.cost_of_reverse_switch = [](double) { return 1.0; };
    const ModelParams p = table1(1.0);
    const SweepResult swept = sweep(p, prob, 512);
    const RefineResult refined = refine(prob, swept);
    REQUIRE(refined.candidates.size() == 2);
    CHECK(std::abs(refined.candidates[0].tstar - 3.0) < 1e-7);
    CHECK(std::abs(refined.candidates[1].tstar - 13.0) < 1e-7);
    CHECK(std::abs(refined.candidates[0].j - refined.candidates[1].j) <= kTieTolerance);
}

TEST_CASE("small proliferation favors full speed throughout") {
    // Near-threshold mass with a short horizon: the terminal-maturity
    // sensitivity is unattenuated, so a small gain rate never pays for
    // a switch. The same instance switches at the exit once cs is large.
    ModelParams p = table1(0.1);
    p.t1 = 0.3;
    const Ensemble ens = single(5.5);
    const SweepProblem prob = make_sweep_problem(p, ens);
    const SweepResult swept = sweep(p, prob, 512);
    CHECK(swept.best_index == 0);  // argmin at t0, i.e. u == 1
    const RefineResult refined = refine(prob, swept);
    CHECK(refined.tstar == p.t0);
    CHECK(refined.local_min);

    ModelParams ph = p;
    ph.cs = 7.0;
    const SweepProblem prob7 = make_sweep_problem(ph, ens);
    const RefineResult refined7 = refine(prob7, sweep(ph, prob7, 512));
    CHECK(std::abs(refined7.tstar - prob7.boundaries[0]) < 1e-6);
}

TEST_CASE("large proliferation switches at the exit time") {
    const ModelParams p = table1(7.0);
    const SweepProblem prob = make_sweep_problem(p, single());
    REQUIRE(prob.boundaries.size() == 1);
    CHECK(prob.boundaries[0] == doctest::Approx(kExitZeroW).epsilon(1e-14));

    const SweepResult swept = sweep(p, prob, 1024);
    CHECK(swept.theorem_conditions);
    const double cell = (p.t1 - p.t0) / 1023.0;
    CHECK(std::abs(swept.tstar_best - kExitZeroW) <= cell);

    const RefineResult refined = refine(prob, swept);
    CHECK(std::abs(refined.tstar - kExitZeroW) < 1e-6);
    CHECK(swept.reverse_never_beats);
}

TEST_CASE("grid stability of the argmin") {
    const ModelParams p = table1(7.0);
    const SweepProblem prob = make_sweep_problem(p, single());
    const SweepResult coarse = sweep(p, prob, 512);
    const SweepResult fine = sweep(p, prob, 1024);
    const double coarse_cell = (p.t1 - p.t0) / 511.0;
    CHECK(std::abs(coarse.tstar_best - fine.tstar_best) < coarse_cell);
}

TEST_CASE("sweep cost is continuous across the grid") {
    const ModelParams p = table1(2.0);
    const SweepProblem prob = make_sweep_problem(p, single(1.0));
    const SweepResult a = sweep(p, prob, 512);
    const SweepResult b = sweep(p, prob, 1024);
    auto max_delta = [](const SweepResult& r) {
        double d = 0.0;
        for (std::size_t i = 0; i + 1 < r.points.size(); ++i)
            d = std::max(d, std::abs(r.points[i + 1].j - r.points[i].j));
        return d;
    };
    // Halving the step roughly halves the largest neighbor jump.
    CHECK(max_delta(b) < 0.75 * max_delta(a));
}

TEST_CASE("two-mass default instance: three segments with interior optimum") {
    for (double cs : {0.8, 1.0}) {
        ModelParams p = table1(cs);
        p.t1 = 1.2;
        const Ensemble ens = two_mass_default();
        const SweepProblem prob = make_sweep_problem(p, ens);
        REQUIRE(prob.boundaries.size() == 2);

        const SweepResult swept = sweep(p, prob, 2048);
        bool seg_seen[3] = {false, false, false};
        for (const auto& q : swept.points) seg_seen[q.segment] = true;
        CHECK(seg_seen[0]);
        CHECK(seg_seen[1]);
        CHECK(seg_seen[2]);

        const RefineResult refined = refine(prob, swept);
        CHECK(refined.tstar > prob.boundaries[0] + 1e-4);
        CHECK(refined.tstar < prob.boundaries[1] - 1e-4);

        // The switching-function zero confirms the refined argmin.
        const auto flow = simulate(p, ens, StepControl::bang_bang(p, refined.tstar));
        const auto adj = backward_adjoint(flow);
        const auto scan = switching_function(flow, adj);
        std::size_t smooth = 0;
        for (const auto& z : scan.zeros) {
            if (z.at_jump) continue;
            ++smooth;
            CHECK(z.phi_dot > 0.0);
            CHECK(std::abs(z.t - refined.tstar) < 1e-4);
        }
        CHECK(smooth == 1);
    }
}

TEST_CASE("falsification never beats the refined optimum") {
    const ModelParams p = table1(7.0);
    const Ensemble ens = single();
    const SweepProblem prob = make_sweep_problem(p, ens);
    const RefineResult refined = refine(prob, sweep(p, prob, 512));

    // The extreme constants belong to the bang-bang family themselves.
    CHECK(cost(p, ens, StepControl::constant(1.0, p.t0)) >= refined.j - kFalsifyTolerance);
    CHECK(cost(p, ens, StepControl::constant(p.w, p.t0)) >= refined.j - kFalsifyTolerance);

    const FalsifyReport rep =
        falsify_with_step_controls(p, ens, 500, kDefaultFalsifySeed, refined.j);
    CHECK(rep.violations == 0);
    CHECK(rep.worst_margin >= -kFalsifyTolerance);
    CHECK(rep.margins.size() == 500);

    // Deterministic given the seed, regardless of thread count.
    const FalsifyReport rep1 =
        falsify_with_step_controls(p, ens, 500, kDefaultFalsifySeed, refined.j, 1);
    const FalsifyReport rep2 =
        falsify_with_step_controls(p, ens, 500, kDefaultFalsifySeed, refined.j, 2);
    CHECK(rep1.margins == rep2.margins);
}

TEST_CASE("measure problems sweep without boundaries") {
    const ModelParams p = table1(1.0);
    DensityGrid g;
    g.nx = 2;
    g.ny = 2;
    g.ys = p.ys;
    g.values = {1.0, 1.0, 1.0, 1.0};
    const InitialMeasure m = InitialMeasure::density(g, 16, 16);
    const SweepProblem prob = make_sweep_problem(p, m);
    CHECK(prob.boundaries.empty());
    const SweepResult swept = sweep(p, prob, 256);
    const RefineResult refined = refine(prob, swept);
    CHECK(std::isfinite(refined.j));
    // Dirac pipeline agrees with the quadrature cost at the optimum.
    const double j_dirac =
        cost(p, to_ensemble(m), StepControl::bang_bang(p, refined.tstar));
    CHECK(j_dirac == doctest::Approx(refined.j).epsilon(1e-12));
}
