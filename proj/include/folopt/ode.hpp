#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

namespace folopt {

struct OdeOptions {
    double abs_tol = 1e-13;
    double rel_tol = 1e-12;
    /// Optional per-component absolute tolerances (overrides abs_tol).
    /// A near-zero entry keeps a homogeneous component under pure
    /// relative control all the way into its exponential tail.
    std::vector<double> abs_tol_components;
    double max_step = std::numeric_limits<double>::infinity();
    std::size_t max_steps = 4000000;
};

/// Dense solution of an initial value problem: accepted step endpoints
/// with their derivatives, queried by cubic Hermite interpolation.
/// Nodes are stored ascending in t regardless of integration direction.
template <std::size_t N>
struct OdeSolution {
    std::vector<double> t;
    std::vector<std::array<double, N>> y;
    std::vector<std::array<double, N>> f;

    double t_front() const { return t.front(); }
    double t_back() const { return t.back(); }

    std::array<double, N> eval(double tq) const {
        const std::size_t i = locate(tq);
        if (t[i + 1] == t[i]) return y[i];
        const double h = t[i + 1] - t[i];
        const double th = (tq - t[i]) / h;
        std::array<double, N> out{};
        for (std::size_t c = 0; c < N; ++c) {
            const double d = y[i + 1][c] - y[i][c];
            out[c] = y[i][c] + th * d +
                     th * (th - 1.0) *
                         ((1.0 - 2.0 * th) * d + (th - 1.0) * h * f[i][c] + th * h * f[i + 1][c]);
        }
        return out;
    }

    double eval(double tq, std::size_t comp) const { return eval(tq)[comp]; }

private:
    std::size_t locate(double tq) const {
        if (t.size() < 2) return 0;
        auto it = std::upper_bound(t.begin(), t.end(), tq);
        std::size_t i = it == t.begin() ? 0 : static_cast<std::size_t>(it - t.begin() - 1);
        return std::min(i, t.size() - 2);
    }
};

namespace detail {

// Dormand-Prince 5(4) coefficients.
inline constexpr double dp_c[7] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
inline constexpr double dp_a[7][6] = {
    {},
    {1.0 / 5},
    {3.0 / 40, 9.0 / 40},
    {44.0 / 45, -56.0 / 15, 32.0 / 9},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
    {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84}};
// 5th-order minus embedded 4th-order weights.
inline constexpr double dp_e[7] = {71.0 / 57600, 0.0,           -71.0 / 16695, 71.0 / 1920,
                                   -17253.0 / 339200, 22.0 / 525, -1.0 / 40};

template <std::size_t N, class RHS>
class DormandPrince {
public:
    DormandPrince(RHS& rhs, const OdeOptions& opt) : rhs_(rhs), opt_(opt) {}

    /// One trial step of size h (signed) from (t, y, f0 = rhs(t, y)).
    /// Returns the scaled error norm; fills y_out and f_out (FSAL stage).
    double step(double t, const std::array<double, N>& y, const std::array<double, N>& f0,
                double h, std::array<double, N>& y_out, std::array<double, N>& f_out) {
        k_[0] = f0;
        std::array<double, N> tmp{};
        for (int s = 1; s < 7; ++s) {
            for (std::size_t c = 0; c < N; ++c) {
                double acc = 0.0;
                for (int j = 0; j < s; ++j) acc += dp_a[s][j] * k_[j][c];
                tmp[c] = y[c] + h * acc;
            }
            rhs_(t + dp_c[s] * h, tmp, k_[s]);
        }
        y_out = tmp;       // stage 7 state equals the 5th-order solution
        f_out = k_[6];     // FSAL
        double err = 0.0;
        for (std::size_t c = 0; c < N; ++c) {
            double e = 0.0;
            for (int s = 0; s < 7; ++s) e += dp_e[s] * k_[s][c];
            e *= h;
            const double atol = opt_.abs_tol_components.empty() ? opt_.abs_tol
                                                                : opt_.abs_tol_components[c];
            const double sc = atol + opt_.rel_tol * std::max(std::abs(y[c]), std::abs(y_out[c]));
            err += (e / sc) * (e / sc);
        }
        return std::sqrt(err / static_cast<double>(N));
    }

private:
    RHS& rhs_;
    const OdeOptions& opt_;
    std::array<std::array<double, N>, 7> k_{};
};

}  // namespace detail

/// Adaptive Dormand-Prince 5(4) integration from ta to tb (either
/// direction).  `forced` lists times the mesh must hit exactly, e.g.
/// control breakpoints; points outside (ta, tb) are ignored.
template <std::size_t N, class RHS>
OdeSolution<N> integrate(RHS&& rhs, double ta, double tb, std::array<double, N> y0,
                         const OdeOptions& opt = {}, std::vector<double> forced = {}) {
    OdeSolution<N> sol;
    const double dir = tb >= ta ? 1.0 : -1.0;
    std::array<double, N> f0{};
    rhs(ta, y0, f0);
    sol.t.push_back(ta);
    sol.y.push_back(y0);
    sol.f.push_back(f0);
    if (ta == tb) return sol;

    std::sort(forced.begin(), forced.end());
    if (dir < 0) std::reverse(forced.begin(), forced.end());
    std::vector<double> stops;
    for (double s : forced)
        if ((s - ta) * dir > 0.0 && (tb - s) * dir > 0.0 &&
            (stops.empty() || s != stops.back()))
            stops.push_back(s);
    stops.push_back(tb);

    detail::DormandPrince<N, std::remove_reference_t<RHS>> stepper(rhs, opt);
    double t = ta;
    std::array<double, N> y = y0, f = f0;

    // Initial step heuristic: scale-based guess, clipped to the span.
    double span = std::abs(tb - ta);
    double fn = 0.0, yn = 0.0;
    for (std::size_t c = 0; c < N; ++c) {
        const double sc = opt.abs_tol + opt.rel_tol * std::abs(y[c]);
        fn = std::max(fn, std::abs(f[c]) / sc);
        yn = std::max(yn, std::abs(y[c]) / sc);
    }
    double h = dir * std::min({span / 10.0, opt.max_step,
                               fn > 0.0 ? std::max(1e-8, 0.01 * std::max(yn, 1.0) / fn) : span / 10.0});

    std::size_t nsteps = 0;
    for (double stop : stops) {
        bool done = false;
        while (!done) {
            if (++nsteps > opt.max_steps)
                throw std::runtime_error("ode: step budget exhausted");
            if (std::abs(h) > opt.max_step) h = dir * opt.max_step;
            if ((t + h - stop) * dir >= 0.0) {
                h = stop - t;
                done = true;
            }
            if (std::abs(h) < 1e-14 * (1.0 + std::abs(t))) {
                // Forced point collapsed onto the current node.
                t = stop;
                done = true;
                sol.t.push_back(t);
                sol.y.push_back(y);
                sol.f.push_back(f);
                break;
            }
            std::array<double, N> y1{}, f1{};
            const double err = stepper.step(t, y, f, h, y1, f1);
            if (err <= 1.0) {
                t = done ? stop : t + h;
                y = y1;
                f = f1;
                sol.t.push_back(t);
                sol.y.push_back(y);
                sol.f.push_back(f);
                const double fac = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
                h = (done ? h : h) * fac;
                if (h == 0.0) h = dir * 1e-14;
            } else {
                done = false;
                h *= std::max(0.1, 0.9 * std::pow(err, -0.2));
            }
        }
    }
    if (dir < 0) {
        std::reverse(sol.t.begin(), sol.t.end());
        std::reverse(sol.y.begin(), sol.y.end());
        std::reverse(sol.f.begin(), sol.f.end());
    }
    return sol;
}

template <std::size_t N>
struct EventOutcome {
    OdeSolution<N> sol;   ///< solution up to (and including) the event or tb
    bool hit = false;
    double t_event = 0.0;
};

/// Forward integration that stops at the first sign change of
/// g(t, y).  The event time is located by bisection on the step size,
/// re-taking genuine RK steps, so the located state carries integration
/// accuracy rather than interpolation accuracy.
template <std::size_t N, class RHS, class Event>
EventOutcome<N> integrate_with_event(RHS&& rhs, double ta, double tb, std::array<double, N> y0,
                                     Event&& g, const OdeOptions& opt = {},
                                     std::vector<double> forced = {}) {
    EventOutcome<N> out;
    OdeSolution<N>& sol = out.sol;
    if (tb < ta) throw std::invalid_argument("integrate_with_event: requires ta <= tb");
    std::array<double, N> f0{};
    rhs(ta, y0, f0);
    sol.t.push_back(ta);
    sol.y.push_back(y0);
    sol.f.push_back(f0);
    if (ta == tb) return out;

    std::sort(forced.begin(), forced.end());
    std::vector<double> stops;
    for (double s : forced)
        if (s > ta && s < tb && (stops.empty() || s != stops.back())) stops.push_back(s);
    stops.push_back(tb);

    detail::DormandPrince<N, std::remove_reference_t<RHS>> stepper(rhs, opt);
    double t = ta;
    std::array<double, N> y = y0, f = f0;
    double gprev = g(t, y);
    double h = std::min({(tb - ta) / 10.0, opt.max_step});

    std::size_t nsteps = 0;
    for (double stop : stops) {
        bool done = false;
        while (!done) {
            if (++nsteps > opt.max_steps)
                throw std::runtime_error("ode: step budget exhausted");
            if (h > opt.max_step) h = opt.max_step;
            if (t + h >= stop) {
                h = stop - t;
                done = true;
            }
            if (h < 1e-14 * (1.0 + std::abs(t))) {
                t = stop;
                sol.t.push_back(t);
                sol.y.push_back(y);
                sol.f.push_back(f);
                break;
            }
            std::array<double, N> y1{}, f1{};
            const double err = stepper.step(t, y, f, h, y1, f1);
            if (err > 1.0) {
                done = false;
                h *= std::max(0.1, 0.9 * std::pow(err, -0.2));
                continue;
            }
            const double tnew = done ? stop : t + h;
            const double gnew = g(tnew, y1);
            if (gprev != 0.0 && (gnew == 0.0 || std::signbit(gnew) != std::signbit(gprev))) {
                // Bisect on the step size; each trial is a full RK step.
                double lo = 0.0, hi = tnew - t;
                std::array<double, N> ye = y1, fe = f1;
                for (int it = 0; it < 90 && hi - lo > 0.0; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    if (mid == lo || mid == hi) break;
                    std::array<double, N> ym{}, fm{};
                    stepper.step(t, y, f, mid, ym, fm);
                    const double gm = g(t + mid, ym);
                    if (gm == 0.0 || std::signbit(gm) != std::signbit(gprev)) {
                        hi = mid;
                        ye = ym;
                        fe = fm;
                    } else {
                        lo = mid;
                    }
                }
                out.hit = true;
                out.t_event = t + hi;
                sol.t.push_back(out.t_event);
                sol.y.push_back(ye);
                sol.f.push_back(fe);
                return out;
            }
            t = tnew;
            y = y1;
            f = f1;
            gprev = gnew;
            sol.t.push_back(t);
            sol.y.push_back(y);
            sol.f.push_back(f);
            const double fac = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
            h = std::abs(h) * fac;
            if (h == 0.0) h = 1e-14;
        }
    }
    return out;
}

}  // namespace folopt
