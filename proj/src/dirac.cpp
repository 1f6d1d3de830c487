#include "folopt/dirac.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "folopt/csv.hpp"
#include "folopt/quadrature.hpp"

namespace folopt {

void Ensemble::validate(const ModelParams& p) const {
    if (particles.empty()) throw std::invalid_argument("ensemble: no particles");
    for (std::size_t k = 0; k < particles.size(); ++k) {
        const Particle& q = particles[k];
        const std::string tag = "particle " + std::to_string(k + 1) + ": ";
        if (!(q.x3 > 0.0)) throw std::invalid_argument(tag + "weight must be positive");
        if (q.x1 < 0.0 || q.x1 > 1.0)
            throw std::invalid_argument(tag + "initial age outside [0, 1]");
        if (q.x2 < 0.0 || q.x2 > p.ys)
            throw std::invalid_argument(tag + "initial maturity outside [0, ys]");
        if (k > 0 && !(q.x2 > particles[k - 1].x2))
            throw std::invalid_argument(tag +
                                        "initial maturities must be strictly increasing; merge weights instead");
    }
}

ParticlePath::ParticlePath(const ModelParams& p, const Particle& init, const StepControl& u)
    : init_(init), t0_(p.t0), t1_(p.t1), cs_(p.cs) {
    exit_ = folopt::exit_time(p, init.x2, u);
    double y = init.x2;
    double s = p.t0;
    for (std::size_t i = 0; i < u.segments(); ++i) {
        const RiccatiSegment ric(p, u.segment_value(i));
        nodes_.push_back({s, y, ric});
        const double seg_end = i + 1 < u.segments() ? u.segment_start(i + 1) : p.t1;
        y = ric.advance(y, seg_end - s);
        s = seg_end;
    }
}

double ParticlePath::maturity(double t) const {
    // Last node with node.t <= t (queries before t0 clamp to the start).
    std::size_t i = nodes_.size() - 1;
    while (i > 0 && nodes_[i].t > t) --i;
    return nodes_[i].seg.advance(nodes_[i].y, std::max(0.0, t - nodes_[i].t));
}

double ParticlePath::weight(double t) const {
    return init_.x3 * std::exp(cs_ * (std::min(t, exit_) - t0_));
}

std::vector<double> EnsembleFlow::exit_times() const {
    std::vector<double> out;
    out.reserve(paths_.size());
    for (const auto& q : paths_) out.push_back(q.exit_time());
    return out;
}

double EnsembleFlow::maturity_moment(double t) const {
    double m = 0.0;
    for (const auto& q : paths_) m += q.maturity(t) * q.weight(t);
    return m;
}

EnsembleFlow simulate(const ModelParams& p, const Ensemble& ens, const StepControl& u) {
    require_valid(p);
    ens.validate(p);
    require_admissible(p, u);
    std::vector<ParticlePath> paths;
    paths.reserve(ens.particles.size());
    for (const Particle& q : ens.particles) paths.emplace_back(p, q, u);
    return EnsembleFlow(p, std::move(paths), u);
}

double cost(const EnsembleFlow& flow) {
    double j = 0.0;
    for (std::size_t k = 0; k < flow.size(); ++k) {
        const auto& q = flow.path(k);
        j -= q.maturity(flow.params().t1) * q.weight(flow.params().t1);
    }
    return j;
}

double cost(const ModelParams& p, const Ensemble& ens, const StepControl& u) {
    return cost(simulate(p, ens, u));
}

double cost_running_integral(const EnsembleFlow& flow) {
    const ModelParams& p = flow.params();
    double j = 0.0;
    for (std::size_t k = 0; k < flow.size(); ++k) {
        const ParticlePath& q = flow.path(k);
        // Smooth pieces are bounded by control breakpoints and the exit.
        std::vector<double> cuts = flow.control().breakpoints_within(p.t0, p.t1);
        if (q.exited() && q.exit_time() > p.t0 && q.exit_time() < p.t1)
            cuts.push_back(q.exit_time());
        cuts.push_back(p.t0);
        cuts.push_back(p.t1);
        std::sort(cuts.begin(), cuts.end());
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            const double a = cuts[i], b = cuts[i + 1];
            if (b <= a) continue;
            j += integrate_smooth(a, b, [&](double t) {
                const double y = q.maturity(t);
                const double x3 = q.weight(t);
                const double mid = 0.5 * (a + b);
                const double c = p.gain_c(q.maturity(mid));  // branch constant on the piece
                return -(p.velocity(y, flow.control()(t)) + c * y) * x3;
            });
        }
        j -= q.initial().x2 * q.initial().x3;
    }
    return j;
}

OdeSimulation simulate_ode(const ModelParams& p, const Ensemble& ens, const StepControl& u,
                           const OdeOptions& opt) {
    require_valid(p);
    ens.validate(p);
    require_admissible(p, u);
    OdeSimulation out;
    for (const Particle& q : ens.particles) {
        const auto forced = u.breakpoints_within(p.t0, p.t1);
        if (q.x2 >= p.ys) {
            auto rhs = [&](double t, const std::array<double, 2>& x, std::array<double, 2>& dx) {
                dx[0] = p.velocity(x[0], u(t));
                dx[1] = 0.0;
            };
            out.paths.push_back(integrate<2>(rhs, p.t0, p.t1, {q.x2, q.x3}, opt, forced));
            out.exit_times.push_back(p.t0);
            continue;
        }
        auto rhs_grow = [&](double t, const std::array<double, 2>& x, std::array<double, 2>& dx) {
            dx[0] = p.velocity(x[0], u(t));
            dx[1] = p.cs * x[1];
        };
        auto crossing = [&](double, const std::array<double, 2>& x) { return x[0] - p.ys; };
        auto first = integrate_with_event<2>(rhs_grow, p.t0, p.t1, {q.x2, q.x3}, crossing, opt, forced);
        if (!first.hit) {
            out.paths.push_back(std::move(first.sol));
            out.exit_times.push_back(exit_sentinel(p));
            continue;
        }
        const double te = first.t_event;
        auto rhs_frozen = [&](double t, const std::array<double, 2>& x, std::array<double, 2>& dx) {
            dx[0] = p.velocity(x[0], u(t));
            dx[1] = 0.0;
        };
        auto tail = integrate<2>(rhs_frozen, te, p.t1, first.sol.y.back(), opt,
                                 u.breakpoints_within(te, p.t1));
        OdeSolution<2> merged = std::move(first.sol);
        for (std::size_t i = 1; i < tail.t.size(); ++i) {
            merged.t.push_back(tail.t[i]);
            merged.y.push_back(tail.y[i]);
            merged.f.push_back(tail.f[i]);
        }
        out.paths.push_back(std::move(merged));
        out.exit_times.push_back(te);
    }
    return out;
}

std::array<double, 3> OdeSimulation::state(const ModelParams& p, const Ensemble& ens,
                                           std::size_t k, double t) const {
    const auto x = paths[k].eval(t);
    return {ens.particles[k].x1 + (t - p.t0), x[0], x[1]};
}

Ensemble read_ensemble_csv(const std::string& path) {
    const CsvTable table = read_csv(path, {"x1", "x2", "x3"});
    Ensemble ens;
    for (const auto& row : table.rows) ens.particles.push_back({row[0], row[1], row[2]});
    return ens;
}

}  // namespace folopt
