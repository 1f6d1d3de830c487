#pragma once

#include <array>
#include <string>
#include <vector>

#include "folopt/control.hpp"
#include "folopt/flow.hpp"
#include "folopt/ode.hpp"
#include "folopt/params.hpp"
#include "folopt/riccati.hpp"

namespace folopt {

/// One Dirac mass: age x1, maturity x2, weight x3 (> 0).
struct Particle {
    double x1 = 0.0;
    double x2 = 0.0;
    double x3 = 1.0;
};

/// Ordered list of Dirac masses.  Initial maturities must be strictly
/// increasing; callers with coinciding maturities should merge weights.
struct Ensemble {
    std::vector<Particle> particles;

    /// Throws std::invalid_argument when the support or ordering
    /// constraints are violated.
    void validate(const ModelParams& p) const;
};

/// Semi-analytic trajectory of a single particle: a list of
/// (segment start, starting maturity, Riccati coefficients) giving O(1)
/// state queries, plus the exactly-located exit time.
class ParticlePath {
public:
    ParticlePath(const ModelParams& p, const Particle& init, const StepControl& u);

    double age(double t) const { return init_.x1 + (t - t0_); }
    double maturity(double t) const;
    /// x3(t) = x3(t0) * exp(cs * (min(t, exit) - t0)).
    double weight(double t) const;
    std::array<double, 3> state(double t) const { return {age(t), maturity(t), weight(t)}; }

    double exit_time() const { return exit_; }
    bool exited() const { return exit_ <= t1_; }
    const Particle& initial() const { return init_; }

private:
    struct Node {
        double t;
        double y;
        RiccatiSegment seg;
    };
    std::vector<Node> nodes_;
    Particle init_;
    double t0_ = 0.0, t1_ = 0.0, cs_ = 0.0;
    double exit_ = 0.0;
};

/// Forward simulation result: per-particle semi-analytic paths plus the
/// control that produced them.
class EnsembleFlow {
public:
    EnsembleFlow(const ModelParams& p, std::vector<ParticlePath> paths, StepControl u)
        : params_(p), paths_(std::move(paths)), control_(std::move(u)) {}

    const ModelParams& params() const { return params_; }
    const StepControl& control() const { return control_; }
    std::size_t size() const { return paths_.size(); }
    const ParticlePath& path(std::size_t k) const { return paths_[k]; }

    /// Exit times, one per particle (sentinel t1+1 when not exited).
    std::vector<double> exit_times() const;

    /// Maturity moment M(t) = sum_k x2^k(t) x3^k(t).
    double maturity_moment(double t) const;

private:
    ModelParams params_;
    std::vector<ParticlePath> paths_;
    StepControl control_;
};

/// Forward simulation with exact (closed-form) boundary crossing times.
EnsembleFlow simulate(const ModelParams& p, const Ensemble& ens, const StepControl& u);

/// Terminal cost J(u) = -sum_k x2^k(t1) x3^k(t1).
double cost(const EnsembleFlow& flow);
double cost(const ModelParams& p, const Ensemble& ens, const StepControl& u);

/// Running-cost form of J: sum_k int f0(x^k, u) dt - sum_k x2^{k0} x3^{k0},
/// evaluated by composite quadrature on the smooth pieces.  Agrees with
/// the terminal form up to quadrature tolerance; kept as a consistency
/// route, not the primary evaluator.
double cost_running_integral(const EnsembleFlow& flow);

/// Cross-check simulation: adaptive integrator with event polling for
/// the threshold crossing.  Returns per-particle dense solutions of
/// (x2, x3) and detected exit times.
struct OdeSimulation {
    std::vector<OdeSolution<2>> paths;  ///< components: maturity, weight
    std::vector<double> exit_times;

    std::array<double, 3> state(const ModelParams& p, const Ensemble& ens, std::size_t k,
                                double t) const;
};
OdeSimulation simulate_ode(const ModelParams& p, const Ensemble& ens, const StepControl& u,
                           const OdeOptions& opt = {});

/// CSV input with header x1,x2,x3 (one particle per row).
Ensemble read_ensemble_csv(const std::string& path);

}  // namespace folopt
