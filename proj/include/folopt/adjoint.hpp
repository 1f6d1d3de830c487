#pragma once

#include <array>
#include <string>
#include <vector>

#include "folopt/dirac.hpp"
#include "folopt/ode.hpp"
#include "folopt/params.hpp"

namespace folopt {

struct AdjointOptions {
    std::size_t grid_n = 2001;          ///< diagnostic output grid on [t0, t1]
    OdeOptions ode;                     ///< backward integration tolerances
    double exclusion = 1e-6;            ///< half-width of zones skipped around jump times
};

/// Costates of one particle.  psi1 is identically zero (zero terminal
/// value, zero dynamics) and is not stored.  psi2 jumps at an interior
/// boundary crossing; psi3 is continuous.
///
/// The backward pass integrates the switching combination
/// Phi = x3 + psi2 instead of psi2 itself: Phi obeys the source-free
/// linear equation dPhi/dt = -(a' + b'u) Phi on both sides of the
/// boundary, so its sign survives in floating point even where it is
/// exponentially small (psi2 = Phi - x3 would lose it to cancellation).
struct ParticleAdjoint {
    double exit = 0.0;      ///< exit time (sentinel t1+1 when the particle never exits)
    bool has_jump = false;  ///< exit strictly inside (t0, t1)
    bool exit_at_t1 = false;

    double jump2 = 0.0;        ///< psi2(exit+0) - psi2(exit-0), equals the Phi jump
    double bracket_lo = 0.0;   ///< cs x3 (ys+psi3) / (a(ys)+b(ys))
    double bracket_hi = 0.0;   ///< cs x3 (ys+psi3) / (a(ys)+b(ys) w)
    double match_residual = 0.0;  ///< relative disagreement of the two jump identities
    double psi2_minus = 0.0, psi2_plus = 0.0;
    double psi3_exit = 0.0;

    OdeSolution<2> upper;  ///< (Phi, psi3) on [exit, t1]; empty when the particle never exits
    OdeSolution<2> lower;  ///< (Phi, psi3) on [t0, min(exit, t1)]; empty when exit == t0

    /// Right-continuous at the jump: queries at the exit return the upper value.
    double phi(double t) const { return raw(t)[0]; }
    double psi2(double t) const { return phi(t) - weight_at(t); }
    double psi3(double t) const { return raw(t)[1]; }
    std::array<double, 2> costate(double t) const { return {psi2(t), psi3(t)}; }

    double weight_at(double t) const;  ///< x3 of the underlying particle

    // Weight-law coefficients copied from the forward trajectory.
    double weight0 = 1.0, gain = 0.0, t0 = 0.0;

private:
    std::array<double, 2> raw(double t) const;
};

struct AdjointSolution {
    std::vector<ParticleAdjoint> particles;
};

/// Backward HMP costate pass along a stored forward trajectory.  Solves
/// the no-gain adjoint equations above the threshold from zero terminal
/// conditions, applies the psi2 jump at the recorded crossing (value
/// from the Hamiltonian-matching identities, bracket membership checked
/// separately) and continues with the proliferation-phase equations.
AdjointSolution backward_adjoint(const EnsembleFlow& flow, const AdjointOptions& opt = {});

/// Variant taking the control explicitly; throws std::invalid_argument
/// when it does not match the control stored in the trajectory.
AdjointSolution backward_adjoint(const EnsembleFlow& flow, const StepControl& u,
                                 const AdjointOptions& opt = {});

/// Per-particle Hamiltonian  (a + c x2) x3 + psi1 + a psi2 + c x3 psi3
/// + b (x3 + psi2) u  evaluated at one state/costate pair.
double hamiltonian(const ModelParams& p, const std::array<double, 3>& x, double u,
                   const std::array<double, 3>& psi);

/// Sum of the absolute magnitudes of the Hamiltonian terms; the natural
/// scale against which constancy is measured.
double hamiltonian_scale(const ModelParams& p, const std::array<double, 3>& x, double u,
                         const std::array<double, 3>& psi);

/// Pointwise maximizer of the Hamiltonian over [w, 1]: 1 where the
/// aggregated switching function is positive, w where negative.
double pointwise_max_control(const ModelParams& p, double phi_n);

struct SwitchingZero {
    double t = 0.0;
    double phi_dot = 0.0;   ///< analytic d(Phi_N)/dt at the zero (smooth zeros only)
    bool at_jump = false;   ///< sign change caused by a costate jump, not a smooth zero
};

/// Switching function sampled on a uniform grid, with located zeros.
struct SwitchingScan {
    std::vector<double> t;
    std::vector<double> phi_n;               ///< sum_k b(x2^k)(x3^k + psi2^k)
    std::vector<std::vector<double>> phi_k;  ///< per particle x3^k + psi2^k
    std::vector<SwitchingZero> zeros;
};

SwitchingScan switching_function(const EnsembleFlow& flow, const AdjointSolution& adj,
                                 std::size_t grid_n = 2001, double exclusion = 1e-6);

/// Direct evaluations at one time (right-continuous at jumps).
double phi_n_at(const EnsembleFlow& flow, const AdjointSolution& adj, double t);
double phi_n_rate_at(const EnsembleFlow& flow, const AdjointSolution& adj, double t);

struct CertificateCheck {
    std::string name;
    double measured = 0.0;
    double threshold = 0.0;
    bool pass = false;
    std::string note;
};

/// Outcome of certifying a bang-bang candidate against the first-order
/// conditions.  `hypotheses` reflects the sufficient conditions of the
/// switching theorem; the checks run either way.
struct Certificate {
    double tstar = 0.0;
    bool hypotheses = false;
    ParamsReport params_report;
    std::vector<double> exit_times;
    double hamiltonian_value = 0.0;  ///< mean of the pointwise-max Hamiltonian
    std::vector<CertificateCheck> checks;
    bool all_pass = false;

    std::string text() const;
};

// Thresholds of the individual certificate checks.
inline constexpr double kHamiltonianSpreadTol = 1e-6;
inline constexpr double kConservedAboveTol = 1e-8;
inline constexpr double kDerivativeIdentityTol = 1e-5;
inline constexpr double kJumpMatchTol = 1e-6;
inline constexpr double kBracketSlack = 1e-9;

Certificate certify_bang_bang(const ModelParams& p, const Ensemble& ens, double tstar,
                              const AdjointOptions& opt = {});

/// Adjoint trajectories on the output grid as CSV rows
/// (t, psi1_k, psi2_k, psi3_k per particle, then phi_1, ..., phi_N, phi_n).
std::vector<std::vector<double>> adjoint_grid_rows(const EnsembleFlow& flow,
                                                   const AdjointSolution& adj,
                                                   std::size_t grid_n);

}  // namespace folopt
