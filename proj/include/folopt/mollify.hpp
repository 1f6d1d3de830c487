#pragma once

#include <vector>

#include "folopt/control.hpp"
#include "folopt/dirac.hpp"
#include "folopt/ode.hpp"
#include "folopt/params.hpp"

namespace folopt {

/// Quintic-smoothstep mollification of the gain indicator.  The bump
/// kernel w_i(s) = 30 i sigma^2 (1-sigma)^2 with sigma = -s i lives on
/// [-1/i, 0], has unit mass and |w_i'| <= 6 i^2; its primitive gives the
/// smoothed indicator chi_i in closed form:
///     chi_i(y) = S(i (ys - y)),  S(s) = s^3 (10 - 15 s + 6 s^2) on [0,1],
/// so chi_i = 1 for y <= ys - 1/i, 0 for y >= ys, monotone in between.
struct Mollifier {
    int index = 1;
    double ys = 0.0;

    Mollifier(int i, double ys_) : index(i), ys(ys_) {
        if (i < 1) throw std::invalid_argument("mollifier: index must be >= 1");
    }

    double kernel(double s) const {
        const double sigma = -s * static_cast<double>(index);
        if (sigma <= 0.0 || sigma >= 1.0) return 0.0;
        const double m = sigma * (1.0 - sigma);
        return 30.0 * static_cast<double>(index) * m * m;
    }

    double chi(double y) const {
        const double s = static_cast<double>(index) * (ys - y);
        if (s <= 0.0) return 0.0;
        if (s >= 1.0) return 1.0;
        return s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
    }

    double chi_prime(double y) const {
        const double s = static_cast<double>(index) * (ys - y);
        if (s <= 0.0 || s >= 1.0) return 0.0;
        const double m = s * (1.0 - s);
        return -30.0 * static_cast<double>(index) * m * m;
    }

    double layer_lower() const { return ys - 1.0 / static_cast<double>(index); }
};

/// Cap on the mollifier index; beyond this the layer is thinner than
/// integration tolerances can resolve reliably.
inline constexpr int kMaxMollifierIndex = 1000000;

/// Smooth single-particle trajectory under the regularized dynamics
/// (x3 grows at rate cs chi_i(x2); x2 unchanged).  No events: the layer
/// endpoints are located up front from the closed-form transit times
/// and forced into the mesh.
struct RegularizedFlow {
    Particle init;
    int index = 1;
    OdeSolution<2> sol;  ///< components: maturity, weight
    double t_layer_enter = 0.0;  ///< x2 reaches ys - 1/i (sentinel t1+1 if never)
    double t_layer_exit = 0.0;   ///< x2 reaches ys (sentinel t1+1 if never)

    std::array<double, 3> state(const ModelParams& p, double t) const {
        const auto x = sol.eval(t);
        return {init.x1 + (t - p.t0), x[0], x[1]};
    }
};

RegularizedFlow simulate_regularized(const ModelParams& p, int index, const Particle& q,
                                     const StepControl& u, const OdeOptions& opt = {});

/// Backward costates of the regularized problem (psi1 identically zero,
/// zero terminal conditions, smooth everywhere).
struct RegularizedAdjoint {
    OdeSolution<2> sol;  ///< components: psi2, psi3
};

RegularizedAdjoint adjoint_regularized(const ModelParams& p, const RegularizedFlow& flow,
                                       const StepControl& u, const OdeOptions& opt = {});

/// Smooth reference control: the bang-bang candidate with the jump
/// replaced by a smoothstep ramp of width 1/i ending at tstar.
double ramp_reference(const ModelParams& p, int index, double tstar, double t);

/// Penalized regularized cost
///   J_i(u) = -int (a + b u + cs chi_i(x2) x2) x3 dt
///            + (1/sqrt(i)) int |u - z_i|^2 dt - x2(t0) x3(t0),
/// with z_i the ramp reference built from tstar.
double cost_regularized(const ModelParams& p, int index, const Particle& q, const StepControl& u,
                        double tstar_reference, const OdeOptions& opt = {});

struct BracketRow {
    double index = 0.0;        ///< mollifier index i
    double a_term = 0.0;       ///< A(i): layer integral without the kernel derivative
    double b_term = 0.0;       ///< B(i): kernel-derivative part, by quadrature
    double delta = 0.0;        ///< psi2 increment across the layer
    double split_residual = 0.0;  ///< |delta - (A + B)|
    double bracket_lo = 0.0, bracket_hi = 0.0;  ///< hybrid HMP bracket
    bool inside = false;       ///< delta within the bracket inflated by 10/i
    double layer_width = 0.0;  ///< time spent crossing [ys - 1/i, ys]
};

struct BracketConvergenceReport {
    std::vector<BracketRow> rows;
    double a_rate_slope = 0.0;  ///< log-log slope of |A(i)|
    bool a_decreasing = false;
    bool largest_two_inside = false;
};

/// Verifies that the regularized psi2 increment across the layer
/// converges into the hybrid jump bracket while A(i) vanishes.
/// Requires a hybrid trajectory that exits strictly inside (t0, t1).
BracketConvergenceReport jump_bracket_convergence(const ModelParams& p, const Particle& q,
                                                  const StepControl& u,
                                                  const std::vector<int>& schedule,
                                                  const OdeOptions& opt = {});

}  // namespace folopt
