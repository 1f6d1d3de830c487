#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "folopt/dirac.hpp"
#include "folopt/measure.hpp"
#include "folopt/quadrature.hpp"
#include "folopt/rng.hpp"

using namespace folopt;

namespace {

ModelParams table1(double cs = 1.0) {
    ModelParams p;
    p.cs = cs;
    return p;
}

DensityGrid uniform_density(double ys, double value = 1.0) {
    DensityGrid g;
    g.nx = 2;
    g.ny = 2;
    g.ys = ys;
    g.values.assign(4, value);
    return g;
}

InitialMeasure three_points() {
    return InitialMeasure::particles({{0.1, 0.5, 1.0}, {0.6, 2.0, 0.5}, {0.9, 4.5, 2.0}});
}

}  // namespace

TEST_CASE("measure construction and validation") {
    CHECK_THROWS_AS(InitialMeasure::particles({}), std::invalid_argument);
    CHECK_THROWS_AS(InitialMeasure::particles({{0.5, 1.0, -1.0}}), std::invalid_argument);
    CHECK_THROWS_AS(InitialMeasure::particles({{1.5, 1.0, 1.0}}), std::invalid_argument);

    DensityGrid bad = uniform_density(6.0);
    bad.values[2] = -0.1;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    const InitialMeasure m = three_points();
    CHECK(m.total_mass() == doctest::Approx(3.5).epsilon(1e-15));
    CHECK(m.y_marginal().size() == 3);
}

TEST_CASE("pushforward: mass, moments and particle consistency") {
    const ModelParams p0 = table1(0.0);
    const InitialMeasure m = three_points();
    const StepControl u = StepControl::constant(0.8, p0.t0);

    // No gain: total mass is conserved under the pushforward.
    auto one = [](double, double) { return 1.0; };
    CHECK(pushforward_integrate(p0, m, u, 9.0, one) ==
          doctest::Approx(m.total_mass()).epsilon(1e-14));

    // Identity pushforward at t0 recovers the initial maturity moment.
    const ModelParams p = table1(1.4);
    auto beta = [](double, double y) { return y; };
    CHECK(pushforward_integrate(p, m, u, p.t0, beta) ==
          doctest::Approx(0.5 * 1.0 + 2.0 * 0.5 + 4.5 * 2.0).epsilon(1e-14));

    // Particle-form pushforward of 1 equals the Dirac weight sum exactly.
    Ensemble ens = to_ensemble(m);
    const auto flow = simulate(p, ens, u);
    for (double t : {0.5, 2.0, 11.0}) {
        double x3sum = 0.0;
        for (std::size_t k = 0; k < flow.size(); ++k) x3sum += flow.path(k).weight(t);
        CHECK(pushforward_integrate(p, m, u, t, one) == doctest::Approx(x3sum).epsilon(1e-13));
        CHECK(measure_mass(p, m, u, t) == doctest::Approx(x3sum).epsilon(1e-13));
        CHECK(measure_maturity_moment(p, m, u, t) ==
              doctest::Approx(flow.maturity_moment(t)).epsilon(1e-13));
    }
}

TEST_CASE("pushforward support and positivity") {
    const ModelParams p = table1(1.0);
    const InitialMeasure m = three_points();
    const StepControl u = StepControl::constant(p.w, p.t0);
    const double t = 4.0;
    const double ybar = p.asymptotic_maturity();
    // A test function that vanishes on the predicted support box is
    // integrated to zero: support in [t - t0, 1 + t - t0] x [0, ybar).
    auto outside = [&](double alpha, double betav) {
        return std::max(0.0, alpha - (1.0 + t - p.t0)) + std::max(0.0, (t - p.t0) - alpha) +
               std::max(0.0, betav - ybar);
    };
    CHECK(pushforward_integrate(p, m, u, t, outside) == 0.0);

    auto nonneg = [](double alpha, double betav) { return std::abs(std::sin(alpha)) + betav; };
    CHECK(pushforward_integrate(p, m, u, t, nonneg) >= 0.0);
}

TEST_CASE("measure cost: one-particle reduction and x0 invariance") {
    const ModelParams p = table1(2.0);
    const StepControl u = StepControl::bang_bang(p, 0.9);

    const InitialMeasure one = InitialMeasure::particles({{0.4, 1.5, 0.8}});
    Ensemble ens;
    ens.particles.push_back({0.4, 1.5, 0.8});
    CHECK(cost_measure(p, one, u) == doctest::Approx(cost(p, ens, u)).epsilon(1e-15));

    // Rearranging ages with the maturity marginal fixed leaves J alone.
    const InitialMeasure a =
        InitialMeasure::particles({{0.1, 0.5, 1.0}, {0.2, 2.0, 0.5}, {0.3, 4.5, 2.0}});
    const InitialMeasure b =
        InitialMeasure::particles({{0.9, 0.5, 1.0}, {0.8, 2.0, 0.5}, {0.7, 4.5, 2.0}});
    CHECK(cost_measure(p, a, u) == cost_measure(p, b, u));
}

TEST_CASE("measure cost: no-gain uniform density averages the flow") {
    const ModelParams p = table1(0.0);
    const InitialMeasure m = InitialMeasure::density(uniform_density(p.ys), 32, 32);
    const StepControl u = StepControl::constant(0.9, p.t0);
    const double j = cost_measure(p, m, u);
    // J = -(mass) * mean over y0 of Psi(t1, y0, u); 64-point average.
    const GaussRule rule(64);
    double mean = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i)
        mean += 0.5 * rule.weights[i] *
                maturation_flow(p, p.t1, 0.5 * p.ys * (rule.nodes[i] + 1.0), u);
    CHECK(j == doctest::Approx(-m.total_mass() * mean).epsilon(1e-10));
}

TEST_CASE("quadrature refinement converges") {
    const ModelParams p = table1(2.0);
    const StepControl u = StepControl::bang_bang(p, 2.0);
    const DensityGrid g = uniform_density(p.ys);
    const double ref = cost_measure(p, InitialMeasure::density(g, 100, 100), u);
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t n : {4, 8, 16}) {
        const double err = std::abs(cost_measure(p, InitialMeasure::density(g, n, n), u) - ref);
        CHECK(err < prev);
        prev = err;
    }
    const double err256 =
        std::abs(cost_measure(p, InitialMeasure::density(g, 16, 16), u) - ref);
    CHECK(err256 < 1e-6 * std::abs(ref));
}

TEST_CASE("discretize: collocation, mass preservation and passthrough") {
    const ModelParams p = table1(1.0);
    const DensityGrid g = uniform_density(p.ys, 0.7);
    const InitialMeasure m = InitialMeasure::density(g, 64, 64);

    for (std::size_t n : {16, 64, 256}) {
        const InitialMeasure d = discretize(m, n);
        CHECK(d.points().size() == n);
        CHECK(d.total_mass() == doctest::Approx(m.total_mass()).epsilon(1e-12));
    }

    // Particle-form measures pass through unchanged.
    const InitialMeasure pts = three_points();
    const InitialMeasure d1 = discretize(pts, 1);
    CHECK(d1.points().size() == pts.points().size());
    CHECK(d1.points()[1].y == pts.points()[1].y);

    // Dirac cost converges to the quadrature cost under refinement.
    const StepControl u = StepControl::bang_bang(p, 2.0);
    const double ref = cost_measure(p, InitialMeasure::density(g, 100, 100), u);
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t n : {16, 64, 256, 1024}) {
        const double j = cost(p, to_ensemble(discretize(m, n)), u);
        const double err = std::abs(j - ref);
        CHECK(err < prev);
        prev = err;
    }
}

TEST_CASE("duality: extension by full speed increases the moment") {
    const ModelParams p = table1(1.0);
    Rng rng(2024);
    for (int trial = 0; trial < 5; ++trial) {
        const double t_ext = 1.0;
        // Random step control on [t0, t_ext).
        std::vector<double> times{p.t0}, values{rng.uniform(p.w, 1.0)};
        for (int i = 0; i < 3; ++i) {
            const double t = rng.uniform(p.t0, t_ext);
            if (t > times.back()) {
                times.push_back(t);
                values.push_back(rng.uniform(p.w, 1.0));
            }
        }
        const StepControl u(times, values);
        const InitialMeasure m = three_points();
        ModelParams ps = p;
        ps.t1 = 1.6;
        const DualityReport rep = duality_check(ps, m, u, t_ext, 101);
        CHECK(rep.strictly_increasing);
        CHECK(rep.min_increment > 0.0);
    }

    // Empty extension passes trivially.
    const DualityReport trivial =
        duality_check(p, three_points(), StepControl::constant(p.w, p.t0), p.t1);
    CHECK(trivial.strictly_increasing);

    // Mass at the asymptotic maturity violates the support precondition.
    const double ybar = p.asymptotic_maturity();
    CHECK_THROWS_AS(
        duality_check(p, InitialMeasure::particles({{0.0, ybar, 1.0}}),
                      StepControl::constant(p.w, p.t0), 1.0),
        std::invalid_argument);
}

TEST_CASE("exit-time continuity probe") {
    const ModelParams p = table1(1.0);
    const double y0 = 0.0;

    // Constant sequences reproduce the limit exactly.
    {
        std::vector<std::pair<double, StepControl>> seq;
        std::vector<double> labels;
        for (int n : {2, 4, 8}) {
            seq.emplace_back(y0, StepControl::constant(0.75, p.t0));
            labels.push_back(n);
        }
        const auto rep =
            exit_time_continuity_probe(p, seq, labels, y0, StepControl::constant(0.75, p.t0));
        for (const auto& row : rep.rows) CHECK(row.error == 0.0);
    }

    // Chattering controls with mean 0.75 converge at rate O(1/n).
    {
        std::vector<std::pair<double, StepControl>> seq;
        std::vector<double> labels;
        for (int n : {4, 16, 64, 256}) {
            seq.emplace_back(y0, chattering_control(p, n, 0.75));
            labels.push_back(n);
        }
        const auto rep =
            exit_time_continuity_probe(p, seq, labels, y0, StepControl::constant(0.75, p.t0));
        // O(1/n) bound; the error itself oscillates with the mesh phase.
        for (std::size_t i = 0; i < rep.rows.size(); ++i)
            CHECK(rep.rows[i].error < 2.0 / labels[i]);
        CHECK(rep.rows.back().error < 1e-3);
    }

    // Initial-maturity perturbations obey the minimum-velocity bound
    // (constant controls shift autonomously in time).
    {
        const StepControl u = StepControl::constant(p.w, p.t0);
        const double vmin = p.velocity(p.ys, p.w);  // 0.82: slowest point on [0, ys]
        std::vector<std::pair<double, StepControl>> seq;
        std::vector<double> labels;
        for (int n : {4, 16, 64, 256}) {
            seq.emplace_back(1.0 + 1.0 / n, u);
            labels.push_back(n);
        }
        const auto rep = exit_time_continuity_probe(p, seq, labels, 1.0, u);
        CHECK(rep.errors_decreasing);
        for (std::size_t i = 0; i < rep.rows.size(); ++i)
            CHECK(rep.rows[i].error <= (1.0 / labels[i]) / vmin + 1e-14);
    }
}

TEST_CASE("density csv io") {
    const char* path = "test_density_io.csv";
    {
        std::ofstream out(path);
        out << "# comment\nnx,ny,ys\n2,3,6.0\n1.0,2.0,3.0\n4.0,5.0,6.0\n";
    }
    const DensityGrid g = read_density_csv(path);
    CHECK(g.nx == 2);
    CHECK(g.ny == 3);
    CHECK(g.values.size() == 6);
    CHECK(g.value_at(0.0, 6.0) == 3.0);   // corner (ix=0, iy=ny-1)
    CHECK(g.value_at(1.0, 0.0) == 4.0);   // corner (ix=1, iy=0)

    {
        std::ofstream out(path);
        out << "nx,ny,ys\n2,2,6.0\n1.0,oops\n";
    }
    try {
        (void)read_density_csv(path);
        FAIL("expected parse failure");
    } catch (const std::exception& ex) {
        CHECK(std::string(ex.what()).find(":3:") != std::string::npos);
    }
    std::remove(path);
}
