#pragma once

#include <cmath>
#include <string>
#include <vector>

namespace folopt {

/// Scalar constants of the simplified follicle maturation model.
///
/// The maturation velocity under control u is a(y) + b(y)*u with
/// a(y) = -y^2 and b(y) = c1*y + c2.  Cells proliferate at rate cs while
/// their maturity is below the threshold ys and stop growing once they
/// cross it.  The control is constrained to [w, 1].
struct ModelParams {
    double t0 = 0.0;       ///< initial time
    double t1 = 17.0;      ///< final time
    double c1 = 11.892;    ///< slope of b(y)
    double c2 = 2.288;     ///< intercept of b(y)
    double cs = 1.0;       ///< proliferation rate (no canonical default; configs must set it)
    double ys = 6.0;       ///< threshold maturity
    double w = 0.5;        ///< lower control bound

    double velocity_a(double y) const { return -y * y; }
    double velocity_b(double y) const { return c1 * y + c2; }

    /// Gain c(y): cs on [0, ys), 0 at and above ys (half-open by convention).
    double gain_c(double y) const { return y < ys ? cs : 0.0; }

    /// Maturation velocity a(y) + b(y)*u.
    double velocity(double y, double u) const { return velocity_a(y) + velocity_b(y) * u; }

    /// Positive root of a(y) + b(y) = 0; upper barrier for every trajectory.
    double asymptotic_maturity() const {
        return 0.5 * (c1 + std::sqrt(c1 * c1 + 4.0 * c2));
    }

    /// Strict lower limit for the control bound w: ys^2 / b(ys).
    double control_floor() const { return ys * ys / velocity_b(ys); }

    /// Threshold the proliferation rate must exceed for the switching
    /// theorem: (a(ys) + b(ys)) / ys.
    double cs_floor() const { return (velocity_a(ys) + velocity_b(ys)) / ys; }
};

/// Result of validating a parameter set.  `errors` is empty iff `valid`.
/// The theorem flags are informational, never hard errors.
struct ParamsReport {
    bool valid = false;
    std::vector<std::string> errors;

    double control_floor = 0.0;    ///< ys^2 / b(ys), must lie strictly below w
    double margin_2ys_c1 = 0.0;    ///< 2*ys - c1
    double cs_floor = 0.0;         ///< (a(ys)+b(ys)) / ys
    double exit_time_zero = 0.0;   ///< exit time of y0 = 0 under u == w (valid params only)
    bool horizon_covers_exit = false;  ///< t1 > exit_time_zero
    bool switching_conditions = false; ///< 2*ys-c1 > 0 and cs > cs_floor
    bool theorem_conditions = false;   ///< switching_conditions and horizon_covers_exit
};

/// Checks the standing assumptions of the model and evaluates the
/// sufficient conditions of the bang-bang theorem.
ParamsReport validate(const ModelParams& p);

/// Throws std::invalid_argument with the collected messages if invalid.
void require_valid(const ModelParams& p);

/// One line per reported quantity, human readable.
std::string describe(const ParamsReport& r);

}  // namespace folopt
