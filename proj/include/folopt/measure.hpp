#pragma once

#include <functional>
#include <string>
#include <vector>

#include "folopt/control.hpp"
#include "folopt/dirac.hpp"
#include "folopt/params.hpp"

namespace folopt {

/// One weighted point of an initial measure on [0,1] x [0,ys].
struct WeightedPoint {
    double x = 0.0;
    double y = 0.0;
    double mass = 0.0;
};

/// Nonnegative density sampled on a uniform grid over [0,1] x [0,ys],
/// evaluated by bilinear interpolation.  Values are stored row-major
/// with the x index outer: values[ix * ny + iy].
struct DensityGrid {
    std::size_t nx = 0, ny = 0;
    double ys = 0.0;
    std::vector<double> values;

    double value_at(double x, double y) const;
    void validate() const;
};

/// Initial measure: a weighted particle list, or a density with a
/// tensor Gauss-Legendre rule (which materializes into weighted points
/// at the quadrature nodes).
class InitialMeasure {
public:
    static InitialMeasure particles(std::vector<WeightedPoint> pts);
    static InitialMeasure density(DensityGrid grid, std::size_t quad_nx = 64,
                                  std::size_t quad_ny = 64);

    const std::vector<WeightedPoint>& points() const { return points_; }
    /// Mass summed per distinct maturity (cost and moments only see the
    /// y-marginal; the x coordinate rides along passively).
    const std::vector<WeightedPoint>& y_marginal() const { return marginal_; }
    double total_mass() const;
    bool from_density() const { return has_grid_; }
    const DensityGrid& grid() const;

private:
    InitialMeasure() = default;
    void build_marginal();

    std::vector<WeightedPoint> points_;
    std::vector<WeightedPoint> marginal_;  // x field unused
    bool has_grid_ = false;
    DensityGrid grid_;
};

/// Weak-solution pushforward:
///   int phi(x0 + t - t0, Psi(t, y0, u)) exp(cs (min(t, e(y0,u)) - t0)) drho0.
double pushforward_integrate(const ModelParams& p, const InitialMeasure& rho0,
                             const StepControl& u, double t,
                             const std::function<double(double, double)>& phi,
                             unsigned threads = 0);

/// Total mass and maturity moment of the pushforward at time t.
double measure_mass(const ModelParams& p, const InitialMeasure& rho0, const StepControl& u,
                    double t);
double measure_maturity_moment(const ModelParams& p, const InitialMeasure& rho0,
                               const StepControl& u, double t);

/// Cost for measure data:
///   J = -int Psi(t1, y0, u) exp(cs (min(e(y0,u), t1) - t0)) drho0,
/// reduced to a 1D sum over the y-marginal (the integrand does not
/// depend on x0).
double cost_measure(const ModelParams& p, const InitialMeasure& rho0, const StepControl& u,
                    unsigned threads = 0);

/// Dirac discretization of a density-form measure by quadrature-node
/// collocation.  Exactly n points, factored as close to square as the
/// divisors of n allow.  Particle-form inputs pass through unchanged.
InitialMeasure discretize(const InitialMeasure& rho0, std::size_t n);

/// Converts a measure to a Dirac ensemble, merging weights at exactly
/// coinciding maturities (the merged age is the mass-weighted mean; it
/// does not enter the dynamics or the cost).
Ensemble to_ensemble(const InitialMeasure& rho0);

struct DualityReport {
    std::vector<double> t;
    std::vector<double> moment;
    double min_increment = 0.0;
    bool strictly_increasing = false;
};

/// Extends the control by u == 1 on (t_ext, t1] and verifies the
/// maturity moment is strictly increasing on the extension.  The input
/// control must live on [t0, t_ext].
DualityReport duality_check(const ModelParams& p, const InitialMeasure& rho0,
                            const StepControl& u, double t_ext, std::size_t grid_n = 201);

struct ContinuityRow {
    double parameter = 0.0;  ///< sequence label (e.g. mesh count n)
    double exit = 0.0;
    double error = 0.0;  ///< |e_n - e_limit|
};

struct ExitContinuityReport {
    double exit_limit = 0.0;
    std::vector<ContinuityRow> rows;
    bool errors_decreasing = false;
};

/// Exit-time continuity along a sequence (y0_n, u_n) -> (y0, u).
ExitContinuityReport exit_time_continuity_probe(
    const ModelParams& p, const std::vector<std::pair<double, StepControl>>& sequence,
    const std::vector<double>& labels, double y0_limit, const StepControl& u_limit);

/// Chattering control alternating w and 1 on cells of width 1/n with
/// cell average ubar; converges weak-* to the constant ubar.
StepControl chattering_control(const ModelParams& p, int n, double ubar);

/// Density file: first data line "nx,ny,ys", then nx*ny row-major values
/// (x index outer), all comma separated.
DensityGrid read_density_csv(const std::string& path);

}  // namespace folopt
