#include "folopt/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "folopt/flow.hpp"
#include "folopt/parallel.hpp"

namespace folopt {

SweepProblem make_sweep_problem(const ModelParams& p, const Ensemble& ens) {
    require_valid(p);
    ens.validate(p);
    SweepProblem prob;
    prob.cost_of_switch = [p, ens](double tstar) {
        return cost(p, ens, StepControl::bang_bang(p, tstar));
    };
    prob.cost_of_reverse_switch = [p, ens](double tstar) {
        return cost(p, ens, StepControl::bang_bang_reverse(p, tstar));
    };
    const StepControl w = StepControl::constant(p.w, p.t0);
    for (const Particle& q : ens.particles) {
        const double e = exit_time(p, q.x2, w);
        if (e > p.t0 && e < p.t1) prob.boundaries.push_back(e);
    }
    std::sort(prob.boundaries.begin(), prob.boundaries.end());
    return prob;
}

SweepProblem make_sweep_problem(const ModelParams& p, const InitialMeasure& rho0) {
    require_valid(p);
    SweepProblem prob;
    prob.cost_of_switch = [p, rho0](double tstar) {
        return cost_measure(p, rho0, StepControl::bang_bang(p, tstar));
    };
    prob.cost_of_reverse_switch = [p, rho0](double tstar) {
        return cost_measure(p, rho0, StepControl::bang_bang_reverse(p, tstar));
    };
    return prob;
}

namespace {

int segment_of(const std::vector<double>& boundaries, double t) {
    int s = 0;
    for (double b : boundaries)
        if (t >= b) ++s;
    return s;
}

}  // namespace

SweepResult sweep(const ModelParams& p, const SweepProblem& problem, std::size_t grid_n,
                  unsigned threads) {
    if (grid_n < 2) throw std::invalid_argument("sweep: grid must have at least two points");
    SweepResult res;
    res.boundaries = problem.boundaries;
    res.theorem_conditions = validate(p).theorem_conditions;
    res.points.resize(grid_n);
    std::vector<double> reverse_j(grid_n);
    parallel_for(grid_n, threads, [&](std::size_t i) {
        const double t =
            p.t0 + (p.t1 - p.t0) * static_cast<double>(i) / static_cast<double>(grid_n - 1);
        res.points[i] = {t, problem.cost_of_switch(t), segment_of(problem.boundaries, t)};
        reverse_j[i] = problem.cost_of_reverse_switch(t);
    });
    res.best_index = 0;
    for (std::size_t i = 1; i < grid_n; ++i)
        if (res.points[i].j < res.points[res.best_index].j) res.best_index = i;
    res.tstar_best = res.points[res.best_index].tstar;
    res.j_best = res.points[res.best_index].j;

    std::size_t rbest = 0;
    for (std::size_t i = 1; i < grid_n; ++i)
        if (reverse_j[i] < reverse_j[rbest]) rbest = i;
    res.reverse_tstar_best = res.points[rbest].tstar;
    res.reverse_j_best = reverse_j[rbest];
    res.reverse_never_beats = res.reverse_j_best >= res.j_best - kFalsifyTolerance;
    return res;
}

double golden_section(const std::function<double(double)>& f, double a, double b, double tol,
                      double* value) {
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;  // 0.618...
    double c = b - gr * (b - a);
    double d = a + gr * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = f(d);
        }
    }
    // Include the bracket endpoints: boundary minima are legitimate here
    // (segment ends are exit-time kinks where the optimum may sit).
    double xs[4] = {a, c, d, b};
    double best = xs[0], fbest = f(xs[0]);
    for (double x : {xs[1], xs[2], xs[3]}) {
        const double fx = f(x);
        if (fx < fbest) {
            fbest = fx;
            best = x;
        }
    }
    if (value) *value = fbest;
    return best;
}

RefineResult refine(const SweepProblem& problem, const SweepResult& swept, double tol) {
    if (swept.points.empty()) throw std::invalid_argument("refine: empty sweep");
    const double t0 = swept.points.front().tstar;
    const double t1 = swept.points.back().tstar;

    std::vector<double> edges{t0};
    for (double b : swept.boundaries)
        if (b > t0 && b < t1) edges.push_back(b);
    edges.push_back(t1);

    RefineResult res;
    res.j = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s + 1 < edges.size(); ++s) {
        const double lo = edges[s], hi = edges[s + 1];
        // Best grid point inside this segment.
        std::size_t best = swept.points.size();
        for (std::size_t i = 0; i < swept.points.size(); ++i) {
            const double t = swept.points[i].tstar;
            if (t < lo || t > hi) continue;
            if (best == swept.points.size() || swept.points[i].j < swept.points[best].j) best = i;
        }
        double a = lo, b = hi;
        if (best != swept.points.size()) {
            if (best > 0) a = std::max(lo, swept.points[best - 1].tstar);
            if (best + 1 < swept.points.size()) b = std::min(hi, swept.points[best + 1].tstar);
        }
        double jseg = 0.0;
        const double tseg = golden_section(problem.cost_of_switch, a, b, tol, &jseg);
        res.candidates.push_back({tseg, jseg, static_cast<int>(s)});
        if (jseg < res.j) {
            res.j = jseg;
            res.tstar = tseg;
        }
    }
    // Keep the global minimum and its ties.
    std::vector<RefineCandidate> ties;
    for (const auto& c : res.candidates)
        if (c.j <= res.j + kTieTolerance) ties.push_back(c);
    std::sort(ties.begin(), ties.end(),
              [](const RefineCandidate& a, const RefineCandidate& b) { return a.tstar < b.tstar; });
    res.candidates = std::move(ties);

    const double probe = 10.0 * tol;
    const double left = std::max(t0, res.tstar - probe);
    const double right = std::min(t1, res.tstar + probe);
    res.local_min = problem.cost_of_switch(left) >= res.j - kTieTolerance &&
                    problem.cost_of_switch(right) >= res.j - kTieTolerance;
    return res;
}

StepControl random_step_control(const ModelParams& p, Rng& rng, int max_segments) {
    const int nseg = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_segments)));
    std::vector<double> times{p.t0};
    for (int i = 1; i < nseg; ++i) times.push_back(rng.uniform(p.t0, p.t1));
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    std::vector<double> values;
    values.reserve(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) values.push_back(rng.uniform(p.w, 1.0));
    return StepControl(times, values);
}

FalsifyReport falsify_with_step_controls(const ModelParams& p, const Ensemble& ens,
                                         std::size_t trials, std::uint64_t seed,
                                         double j_reference, unsigned threads) {
    require_valid(p);
    ens.validate(p);
    FalsifyReport rep;
    rep.trials = trials;
    rep.seed = seed;
    rep.j_reference = j_reference;
    rep.margins.resize(trials);
    parallel_for(trials, threads, [&](std::size_t i) {
        Rng rng = Rng::child(seed, i);
        const StepControl u = random_step_control(p, rng);
        rep.margins[i] = cost(p, ens, u) - j_reference;
    });
    rep.worst_margin = std::numeric_limits<double>::infinity();
    for (double m : rep.margins) {
        rep.worst_margin = std::min(rep.worst_margin, m);
        if (m < -kFalsifyTolerance) ++rep.violations;
    }
    if (trials == 0) rep.worst_margin = 0.0;
    return rep;
}

}  // namespace folopt
