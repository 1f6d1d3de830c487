#pragma once

#include "folopt/control.hpp"
#include "folopt/ode.hpp"
#include "folopt/params.hpp"
#include "folopt/riccati.hpp"

namespace folopt {

/// Sentinel exit time for trajectories that never reach ys: t1 + 1,
/// matching the convention used throughout.
inline double exit_sentinel(const ModelParams& p) { return p.t1 + 1.0; }
inline bool has_exited(const ModelParams& p, double exit_time) { return exit_time <= p.t1; }

/// Maturation flow Psi(t, y0, u): solves dy/dt = a(y) + b(y) u(t) from
/// y(t0) = y0 with the per-segment Riccati closed form (primary
/// evaluator).  Throws std::domain_error if y0 lies outside [0, ybar].
double maturation_flow(const ModelParams& p, double t, double y0, const StepControl& u);

/// Same flow via the adaptive embedded Runge-Utta integrator; the
/// independent cross-check of the closed form.
double maturation_flow_ode(const ModelParams& p, double t, double y0, const StepControl& u,
                           const OdeOptions& opt = {});

/// First time the flow from y0 in [0, ys] reaches ys, or the sentinel
/// t1 + 1 when the threshold is not reached by t1.  Unique because the
/// maturation velocity is positive on [0, ys] for admissible controls.
double exit_time(const ModelParams& p, double y0, const StepControl& u);

/// First time the flow from y0 reaches an arbitrary level in [y0, ys],
/// same convention as exit_time.  Used to locate mollifier layers.
double threshold_time(const ModelParams& p, double y0, const StepControl& u, double level);

/// Integral of the maturity along the flow: int_{ta}^{tb} Psi(s, y0, u) ds,
/// assembled from the per-segment closed forms.
double flow_integral(const ModelParams& p, double ta, double tb, double y0, const StepControl& u);

}  // namespace folopt
