#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "folopt/dirac.hpp"
#include "folopt/measure.hpp"
#include "folopt/params.hpp"
#include "folopt/rng.hpp"

namespace folopt {

/// Abstract sweep target: the cost of switching at tstar plus the kink
/// locations of that cost (exit times under u == w for particle data;
/// none for density data, where the kinks are integrated out).
struct SweepProblem {
    std::function<double(double)> cost_of_switch;          ///< J(BangBang(tstar))
    std::function<double(double)> cost_of_reverse_switch;  ///< J(1 -> w at tstar)
    std::vector<double> boundaries;                        ///< ascending, inside (t0, t1)
};

SweepProblem make_sweep_problem(const ModelParams& p, const Ensemble& ens);
SweepProblem make_sweep_problem(const ModelParams& p, const InitialMeasure& rho0);

struct SweepPoint {
    double tstar = 0.0;
    double j = 0.0;
    int segment = 0;  ///< index of the boundary interval containing tstar
};

struct SweepResult {
    std::vector<SweepPoint> points;   ///< uniform grid over [t0, t1], inclusive
    std::vector<double> boundaries;
    std::size_t best_index = 0;
    double tstar_best = 0.0;
    double j_best = 0.0;
    bool theorem_conditions = false;

    // Reverse-family (1 then w) sanity sweep on the same grid.
    double reverse_tstar_best = 0.0;
    double reverse_j_best = 0.0;
    bool reverse_never_beats = false;
};

SweepResult sweep(const ModelParams& p, const SweepProblem& problem, std::size_t grid_n = 1024,
                  unsigned threads = 0);

struct RefineCandidate {
    double tstar = 0.0;
    double j = 0.0;
    int segment = 0;
};

struct RefineResult {
    double tstar = 0.0;
    double j = 0.0;
    bool local_min = false;                  ///< J(tstar +- probe) >= J(tstar)
    std::vector<RefineCandidate> candidates;  ///< global minimum plus ties within 1e-9
};

/// Tie threshold for reporting multiple optimal switching times.
inline constexpr double kTieTolerance = 1e-9;

/// Golden-section polish within the best grid cell of every segment
/// (the cost is smooth inside segments, kinked at their boundaries).
RefineResult refine(const SweepProblem& problem, const SweepResult& swept, double tol = 1e-8);

/// Derivative-free scalar minimization on [a, b]; returns the argmin,
/// optionally the value.  Exposed for direct testing.
double golden_section(const std::function<double(double)>& f, double a, double b, double tol,
                      double* value = nullptr);

struct FalsifyReport {
    std::size_t trials = 0;
    std::uint64_t seed = 0;
    double j_reference = 0.0;   ///< the refined bang-bang optimum being challenged
    double worst_margin = 0.0;  ///< min over trials of J(random) - j_reference
    std::size_t violations = 0; ///< trials beating the reference by more than 1e-9
    std::vector<double> margins;
};

/// Margin a random trial must beat before counting as a violation.
inline constexpr double kFalsifyTolerance = 1e-9;
inline constexpr std::uint64_t kDefaultFalsifySeed = 20240601;

/// Monte-Carlo challenge of bang-bang optimality: random admissible
/// step controls (at most 8 segments) must never beat the reference
/// cost by more than the tolerance.
FalsifyReport falsify_with_step_controls(const ModelParams& p, const Ensemble& ens,
                                         std::size_t trials, std::uint64_t seed,
                                         double j_reference, unsigned threads = 0);

/// Random admissible step control with at most max_segments segments;
/// shared by the falsifier and the test generators.
StepControl random_step_control(const ModelParams& p, Rng& rng, int max_segments = 8);

}  // namespace folopt
