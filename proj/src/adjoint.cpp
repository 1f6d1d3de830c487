#include "folopt/adjoint.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace folopt {

namespace {

bool same_control(const StepControl& a, const StepControl& b) {
    return a.breakpoints() == b.breakpoints() && a.values() == b.values();
}

// Control value just before t (the segment whose half-open interval has
// t as its right endpoint, when t is a breakpoint).
double control_left_limit(const StepControl& u, double t) {
    const auto& times = u.breakpoints();
    std::size_t i = 0;
    for (std::size_t j = 0; j < times.size(); ++j)
        if (times[j] < t) i = j;
    return u.segment_value(i);
}

struct JumpData {
    double delta = 0.0;
    double residual = 0.0;
};

// Hamiltonian-matching identities at a crossing: two algebraically
// equivalent routes for the psi2 jump given the one-sided controls;
// their numerical disagreement is reported, never silently absorbed.
JumpData matching_jump(const ModelParams& p, double x3, double psi2_plus, double psi3, double v1,
                       double v2) {
    const double a = p.velocity_a(p.ys);
    const double b = p.velocity_b(p.ys);
    const double q = p.cs * x3 * (p.ys + psi3);
    const double delta_a = (q + b * (x3 + psi2_plus) * (v1 - v2)) / (a + b * v1);
    const double psi2_minus = psi2_plus - delta_a;
    const double delta_b = (q + b * (x3 + psi2_minus) * (v1 - v2)) / (a + b * v2);
    JumpData out;
    out.delta = delta_a;
    out.residual = std::abs(delta_a - delta_b) / std::max(1.0, std::abs(delta_a));
    return out;
}

ParticleAdjoint solve_particle(const ModelParams& p, const ParticlePath& path,
                               const StepControl& u, const AdjointOptions& options) {
    AdjointOptions opt = options;
    // Phi is homogeneous: keep it under pure relative control so its
    // sign and relative accuracy survive deep exponential decay.
    opt.ode.abs_tol_components = {1e-300, options.ode.abs_tol};
    ParticleAdjoint out;
    out.exit = path.exit_time();
    out.weight0 = path.initial().x3;
    out.gain = p.cs;
    out.t0 = p.t0;

    // State s = (Phi, psi3).  Phi = x3 + psi2 satisfies the same
    // homogeneous equation on both sides of the boundary; psi3 picks up
    // the gain sources only below it.
    auto rhs_above = [&](double t, const std::array<double, 2>& s, std::array<double, 2>& ds) {
        const double y = path.maturity(t);
        const double uv = u(t);
        ds[0] = (2.0 * y - p.c1 * uv) * s[0];  // -(a'(y) + b'(y)u) Phi
        ds[1] = -p.velocity(y, uv);
    };
    auto rhs_below = [&](double t, const std::array<double, 2>& s, std::array<double, 2>& ds) {
        const double y = path.maturity(t);
        const double uv = u(t);
        ds[0] = (2.0 * y - p.c1 * uv) * s[0];
        ds[1] = -p.cs * s[1] - p.velocity(y, uv) - p.cs * y;
    };

    const double span = p.t1 - p.t0;
    const double x3_t1 = path.weight(p.t1);  // Phi(t1) = x3(t1) since psi2(t1) = 0
    const bool exited = path.exited();
    const bool boundary_exit = exited && std::abs(out.exit - p.t1) <= 1e-12 * span;

    if (!exited) {
        // Smooth proliferation-phase adjoint over the whole horizon.
        out.lower = integrate<2>(rhs_below, p.t1, p.t0, {x3_t1, 0.0}, opt.ode,
                                 u.breakpoints_within(p.t0, p.t1));
        return out;
    }
    if (out.exit <= p.t0) {
        // Started at the threshold: no-gain equations, no jump.
        out.upper = integrate<2>(rhs_above, p.t1, p.t0, {x3_t1, 0.0}, opt.ode,
                                 u.breakpoints_within(p.t0, p.t1));
        return out;
    }
    if (boundary_exit) {
        // Crossing exactly at the horizon: the half-bracket relaxation of
        // the terminal condition replaces the two-sided jump.
        out.exit_at_t1 = true;
        const double x3 = path.weight(p.t1);
        const double v1 = control_left_limit(u, p.t1);
        out.psi3_exit = 0.0;
        out.psi2_plus = 0.0;
        out.jump2 = p.cs * x3 * p.ys / (p.velocity_a(p.ys) + p.velocity_b(p.ys) * v1);
        out.psi2_minus = -out.jump2;
        out.bracket_lo = 0.0;
        out.bracket_hi = p.cs * x3 * p.ys / (p.velocity_a(p.ys) + p.velocity_b(p.ys) * p.w);
        out.lower = integrate<2>(rhs_below, p.t1, p.t0, {x3 + out.psi2_minus, 0.0}, opt.ode,
                                 u.breakpoints_within(p.t0, p.t1));
        return out;
    }

    out.has_jump = true;
    out.upper = integrate<2>(rhs_above, p.t1, out.exit, {x3_t1, 0.0}, opt.ode,
                             u.breakpoints_within(out.exit, p.t1));
    const double x3 = path.weight(out.exit);
    const double phi_plus = out.upper.y.front()[0];
    out.psi2_plus = phi_plus - x3;
    out.psi3_exit = out.upper.y.front()[1];

    const double v1 = control_left_limit(u, out.exit);
    const double v2 = u(out.exit);
    const JumpData jump = matching_jump(p, x3, out.psi2_plus, out.psi3_exit, v1, v2);
    out.jump2 = jump.delta;
    out.match_residual = jump.residual;
    out.psi2_minus = out.psi2_plus - out.jump2;

    const double q = p.cs * x3 * (p.ys + out.psi3_exit);
    out.bracket_lo = q / (p.velocity_a(p.ys) + p.velocity_b(p.ys));
    out.bracket_hi = q / (p.velocity_a(p.ys) + p.velocity_b(p.ys) * p.w);

    out.lower = integrate<2>(rhs_below, out.exit, p.t0, {phi_plus - out.jump2, out.psi3_exit},
                             opt.ode, u.breakpoints_within(p.t0, out.exit));
    return out;
}

}  // namespace

double ParticleAdjoint::weight_at(double t) const {
    return weight0 * std::exp(gain * (std::min(t, exit) - t0));
}

std::array<double, 2> ParticleAdjoint::raw(double t) const {
    if (!upper.t.empty() && (lower.t.empty() || t >= upper.t_front())) return upper.eval(t);
    return lower.eval(t);
}

AdjointSolution backward_adjoint(const EnsembleFlow& flow, const AdjointOptions& opt) {
    const ModelParams& p = flow.params();
    AdjointOptions local = opt;
    if (!std::isfinite(local.ode.max_step)) {
        // Keep h |a' + b'u| moderate so the stability polynomial of the
        // homogeneous Phi equation stays positive: Phi must not flip sign
        // numerically even in its exponentially small tail.
        local.ode.max_step = 1.5 / (2.0 * p.asymptotic_maturity() + p.c1);
    }
    AdjointSolution adj;
    adj.particles.reserve(flow.size());
    for (std::size_t k = 0; k < flow.size(); ++k)
        adj.particles.push_back(solve_particle(p, flow.path(k), flow.control(), local));
    return adj;
}

AdjointSolution backward_adjoint(const EnsembleFlow& flow, const StepControl& u,
                                 const AdjointOptions& opt) {
    if (!same_control(flow.control(), u))
        throw std::invalid_argument("backward_adjoint: control does not match the forward trajectory");
    return backward_adjoint(flow, opt);
}

double hamiltonian(const ModelParams& p, const std::array<double, 3>& x, double u,
                   const std::array<double, 3>& psi) {
    const double a = p.velocity_a(x[1]);
    const double b = p.velocity_b(x[1]);
    const double c = p.gain_c(x[1]);
    return (a + c * x[1]) * x[2] + psi[0] + a * psi[1] + c * x[2] * psi[2] +
           b * (x[2] + psi[1]) * u;
}

double hamiltonian_scale(const ModelParams& p, const std::array<double, 3>& x, double u,
                         const std::array<double, 3>& psi) {
    const double a = p.velocity_a(x[1]);
    const double b = p.velocity_b(x[1]);
    const double c = p.gain_c(x[1]);
    return std::abs(a * x[2]) + std::abs(c * x[1] * x[2]) + std::abs(psi[0]) +
           std::abs(a * psi[1]) + std::abs(c * x[2] * psi[2]) + std::abs(b * (x[2] + psi[1]) * u);
}

double pointwise_max_control(const ModelParams& p, double phi_n) {
    return phi_n > 0.0 ? 1.0 : p.w;
}

double phi_n_at(const EnsembleFlow& flow, const AdjointSolution& adj, double t) {
    double s = 0.0;
    for (std::size_t k = 0; k < flow.size(); ++k)
        s += flow.params().velocity_b(flow.path(k).maturity(t)) * adj.particles[k].phi(t);
    return s;
}

double phi_n_rate_at(const EnsembleFlow& flow, const AdjointSolution& adj, double t) {
    // d(Phi_N)/dt = sum_k (c1 x2^2 + 2 c2 x2)(x3 + psi2); independent of u.
    const ModelParams& p = flow.params();
    double s = 0.0;
    for (std::size_t k = 0; k < flow.size(); ++k) {
        const double y = flow.path(k).maturity(t);
        s += (p.c1 * y * y + 2.0 * p.c2 * y) * adj.particles[k].phi(t);
    }
    return s;
}

SwitchingScan switching_function(const EnsembleFlow& flow, const AdjointSolution& adj,
                                 std::size_t grid_n, double exclusion) {
    const ModelParams& p = flow.params();
    SwitchingScan scan;
    scan.t.resize(grid_n);
    scan.phi_n.resize(grid_n);
    scan.phi_k.assign(flow.size(), std::vector<double>(grid_n));
    for (std::size_t i = 0; i < grid_n; ++i) {
        const double t = p.t0 + (p.t1 - p.t0) * static_cast<double>(i) / (grid_n - 1);
        scan.t[i] = t;
        double s = 0.0;
        for (std::size_t k = 0; k < flow.size(); ++k) {
            const double phi = adj.particles[k].phi(t);
            scan.phi_k[k][i] = phi;
            s += p.velocity_b(flow.path(k).maturity(t)) * phi;
        }
        scan.phi_n[i] = s;
    }

    const auto exits = flow.exit_times();
    for (std::size_t i = 0; i + 1 < grid_n; ++i) {
        const double a = scan.phi_n[i], b = scan.phi_n[i + 1];
        if (a == 0.0 || std::signbit(a) == std::signbit(b)) continue;
        SwitchingZero z;
        for (double e : exits)
            if (e >= scan.t[i] - exclusion && e <= scan.t[i + 1] + exclusion) z.at_jump = true;
        if (z.at_jump) {
            z.t = 0.5 * (scan.t[i] + scan.t[i + 1]);
            scan.zeros.push_back(z);
            continue;
        }
        double lo = scan.t[i], hi = scan.t[i + 1];
        double flo = a;
        for (int it = 0; it < 80 && hi - lo > 1e-14; ++it) {
            const double mid = 0.5 * (lo + hi);
            const double fm = phi_n_at(flow, adj, mid);
            if (fm == 0.0 || std::signbit(fm) != std::signbit(flo)) {
                hi = mid;
            } else {
                lo = mid;
                flo = fm;
            }
        }
        z.t = 0.5 * (lo + hi);
        z.phi_dot = phi_n_rate_at(flow, adj, z.t);
        scan.zeros.push_back(z);
    }
    return scan;
}

namespace {

struct HamiltonianStats {
    double spread = 0.0;
    double mean = 0.0;
    double scale = 0.0;
    double relative_spread = 0.0;
};

HamiltonianStats hamiltonian_constancy(const EnsembleFlow& flow, const AdjointSolution& adj,
                                       const AdjointOptions& opt) {
    const ModelParams& p = flow.params();
    std::vector<double> skip = flow.exit_times();
    for (double b : flow.control().breakpoints_within(p.t0, p.t1)) skip.push_back(b);

    double hmin = std::numeric_limits<double>::infinity();
    double hmax = -hmin;
    double sum = 0.0, scale = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < opt.grid_n; ++i) {
        const double t = p.t0 + (p.t1 - p.t0) * static_cast<double>(i) / (opt.grid_n - 1);
        bool excluded = false;
        for (double s : skip)
            if (std::abs(t - s) <= opt.exclusion) excluded = true;
        if (excluded) continue;
        const double phin = phi_n_at(flow, adj, t);
        const double uopt = pointwise_max_control(p, phin);
        double h = 0.0, sc = 0.0;
        for (std::size_t k = 0; k < flow.size(); ++k) {
            const auto x = flow.path(k).state(t);
            const auto psi = adj.particles[k].costate(t);
            h += hamiltonian(p, x, uopt, {0.0, psi[0], psi[1]});
            sc += hamiltonian_scale(p, x, uopt, {0.0, psi[0], psi[1]});
        }
        hmin = std::min(hmin, h);
        hmax = std::max(hmax, h);
        sum += h;
        scale = std::max(scale, sc);
        ++count;
    }
    HamiltonianStats st;
    st.spread = hmax - hmin;
    st.mean = count ? sum / static_cast<double>(count) : 0.0;
    st.scale = scale;
    // Relative to the larger of |mean| and the term-magnitude scale, so
    // the measure stays meaningful when the constant itself is ~0 (it is
    // exponentially small whenever the horizon greatly exceeds the exit).
    st.relative_spread = st.spread / std::max(std::abs(st.mean), std::max(st.scale, 1e-300));
    return st;
}

}  // namespace

Certificate certify_bang_bang(const ModelParams& p, const Ensemble& ens, double tstar,
                              const AdjointOptions& opt) {
    Certificate cert;
    cert.tstar = tstar;
    cert.params_report = validate(p);
    cert.hypotheses = cert.params_report.theorem_conditions;
    if (!cert.params_report.valid)
        throw std::invalid_argument("certify_bang_bang: invalid parameters");

    const StepControl u = StepControl::bang_bang(p, tstar);
    const EnsembleFlow flow = simulate(p, ens, u);
    const AdjointSolution adj = backward_adjoint(flow, opt);
    cert.exit_times = flow.exit_times();

    auto add = [&](const std::string& name, double measured, double threshold, bool pass,
                   std::string note = "") {
        cert.checks.push_back({name, measured, threshold, pass, std::move(note)});
    };

    // psi1 vanishes identically: zero terminal value, zero dynamics,
    // continuous across crossings.
    add("psi1 identically zero", 0.0, 0.0, true, "exact by construction");

    // (a) sign pattern of the switching function around tstar.
    {
        std::vector<double> skip = cert.exit_times;
        skip.push_back(tstar);
        double worst = -std::numeric_limits<double>::infinity();
        const SwitchingScan scan = switching_function(flow, adj, opt.grid_n, opt.exclusion);
        for (std::size_t i = 0; i < scan.t.size(); ++i) {
            const double t = scan.t[i];
            if (t <= p.t0 || t >= p.t1) continue;
            bool excluded = false;
            for (double s : skip)
                if (std::abs(t - s) <= opt.exclusion) excluded = true;
            if (excluded) continue;
            const double v = t < tstar ? scan.phi_n[i] : -scan.phi_n[i];
            worst = std::max(worst, v);
        }
        add("switching sign pattern", worst, 0.0, worst < 0.0,
            "max of Phi_N before tstar and -Phi_N after");

        // Smooth zeros must be upcrossings (positive analytic derivative).
        double min_rate = std::numeric_limits<double>::infinity();
        bool ok = true;
        std::size_t smooth = 0;
        for (const auto& z : scan.zeros) {
            if (z.at_jump) continue;
            ++smooth;
            min_rate = std::min(min_rate, z.phi_dot);
            ok = ok && z.phi_dot > 0.0;
        }
        if (smooth == 0)
            add("upcrossing at smooth zeros", 0.0, 0.0, true, "no smooth zeros detected");
        else
            add("upcrossing at smooth zeros", min_rate, 0.0, ok, "min dPhi_N/dt over zeros");
    }

    // (b) Hamiltonian constancy, measured off the jump neighborhoods.
    {
        const HamiltonianStats st = hamiltonian_constancy(flow, adj, opt);
        cert.hamiltonian_value = st.mean;
        add("hamiltonian constancy", st.relative_spread, kHamiltonianSpreadTol,
            st.relative_spread < kHamiltonianSpreadTol,
            "spread over max(|mean|, term scale)");
    }

    // (c) psi2 jump inside the HMP bracket, and agreement of the two
    // matching identities it was solved from.
    {
        double worst_outside = 0.0;
        double worst_match = 0.0;
        bool any = false;
        for (const auto& a : adj.particles) {
            if (a.has_jump) {
                any = true;
                const double scale = std::max(1.0, std::abs(a.bracket_hi));
                const double outside =
                    std::max(a.bracket_lo - a.jump2, a.jump2 - a.bracket_hi) / scale;
                worst_outside = std::max(worst_outside, outside);
                worst_match = std::max(worst_match, a.match_residual);
            } else if (a.exit_at_t1) {
                any = true;
                const double scale = std::max(1.0, std::abs(a.bracket_hi));
                const double v = -a.psi2_minus;  // half-bracket condition on -psi2(t1)
                const double outside = std::max(a.bracket_lo - v, v - a.bracket_hi) / scale;
                worst_outside = std::max(worst_outside, outside);
            }
        }
        if (!any) {
            add("jump bracket", 0.0, kBracketSlack, true, "no boundary crossings");
        } else {
            add("jump bracket", worst_outside, kBracketSlack, worst_outside <= kBracketSlack,
                "scaled distance outside the bracket");
            add("jump matching consistency", worst_match, kJumpMatchTol,
                worst_match <= kJumpMatchTol);
        }
    }

    // Conserved combination x2 + psi3: constant above the threshold,
    // exponential decay identity below it.
    {
        double worst_const = 0.0;
        double worst_decay = 0.0;
        const double fd = 1e-4;
        for (std::size_t k = 0; k < flow.size(); ++k) {
            const auto& path = flow.path(k);
            const auto& a = adj.particles[k];
            const double x2_t1 = path.maturity(p.t1);
            const double lo_end = a.has_jump ? a.exit : (a.exit <= p.t0 ? p.t0 : p.t1);
            if (a.has_jump || a.exit <= p.t0) {
                const double from = std::max(lo_end, p.t0) + opt.exclusion;
                for (int i = 0; i <= 40; ++i) {
                    const double t = from + (p.t1 - from) * i / 40.0;
                    const double v = path.maturity(t) + a.psi3(t);
                    worst_const = std::max(worst_const, std::abs(v - x2_t1));
                }
            }
            if (!a.lower.t.empty()) {
                const double hi = (a.has_jump ? a.exit : p.t1) - opt.exclusion - fd;
                for (int i = 0; i <= 40; ++i) {
                    const double t = p.t0 + fd + (hi - p.t0 - 2.0 * fd) * i / 40.0;
                    bool near_break = false;
                    for (double bpt : flow.control().breakpoints_within(p.t0, p.t1))
                        if (std::abs(t - bpt) < 2.0 * fd) near_break = true;
                    if (near_break) continue;
                    const double s0 = path.maturity(t - fd) + a.psi3(t - fd);
                    const double s1 = path.maturity(t + fd) + a.psi3(t + fd);
                    const double mid = path.maturity(t) + a.psi3(t);
                    const double lhs = (s1 - s0) / (2.0 * fd);
                    const double rhs = -p.cs * mid;
                    // Scale: the derivative terms being differenced (the
                    // maturation velocity enters both x2' and psi3').
                    const double denom =
                        std::abs(rhs) +
                        std::abs(p.velocity(path.maturity(t), flow.control()(t))) + 1e-12;
                    worst_decay = std::max(worst_decay, std::abs(lhs - rhs) / denom);
                }
            }
        }
        add("conserved combination above threshold", worst_const, kConservedAboveTol,
            worst_const < kConservedAboveTol, "max |x2 + psi3 - x2(t1)|");
        add("conserved combination decay below threshold", worst_decay, kDerivativeIdentityTol,
            worst_decay < kDerivativeIdentityTol, "finite differences vs -cs (x2 + psi3)");
    }

    // Switching-function propagation: d(x3 + psi2)/dt = -(a' + b'u) (x3 + psi2)
    // between jumps, checked against finite differences.
    {
        double worst = 0.0;
        const double fd = 1e-4;
        std::vector<double> skip = cert.exit_times;
        skip.push_back(tstar);
        for (std::size_t k = 0; k < flow.size(); ++k) {
            const auto& path = flow.path(k);
            const auto& a = adj.particles[k];
            // Points where Phi has decayed below roundoff relative to its
            // own range carry no testable information.
            const double phi_scale =
                std::max(std::abs(a.phi(p.t0)), std::abs(a.phi(p.t1)));
            for (int i = 1; i < 60; ++i) {
                const double t = p.t0 + (p.t1 - p.t0) * i / 60.0;
                bool excluded = false;
                for (double s : skip)
                    if (std::abs(t - s) < 2.0 * fd) excluded = true;
                if (excluded || t - fd < p.t0 || t + fd > p.t1) continue;
                const double phim = a.phi(t);
                if (std::abs(phim) < 1e-8 * phi_scale) continue;
                const double y = path.maturity(t);
                const double phi0 = a.phi(t - fd);
                const double phi1 = a.phi(t + fd);
                const double lhs = (phi1 - phi0) / (2.0 * fd);
                const double rhs = (2.0 * y - p.c1 * flow.control()(t)) * phim;
                // The rate crosses zero where 2 x2 = c1 u; |Phi| itself is
                // the natural unit there.
                const double denom = std::abs(rhs) + std::abs(phim) + 1e-12;
                worst = std::max(worst, std::abs(lhs - rhs) / denom);
            }
        }
        add("switching function propagation", worst, kDerivativeIdentityTol,
            worst < kDerivativeIdentityTol, "finite differences vs -(a'+b'u) Phi");
    }

    cert.all_pass = true;
    for (const auto& c : cert.checks) cert.all_pass = cert.all_pass && c.pass;
    return cert;
}

std::string Certificate::text() const {
    char buf[256];
    std::string out;
    auto line = [&](const char* fmt, auto... args) {
        if constexpr (sizeof...(args) == 0)
            std::snprintf(buf, sizeof(buf), "%s", fmt);
        else
            std::snprintf(buf, sizeof(buf), fmt, args...);
        out += buf;
        out += '\n';
    };
    line("bang-bang certificate, tstar = %.17g", tstar);
    line("theorem hypotheses: %s",
         hypotheses ? "satisfied" : "not satisfied (diagnostics still run)");
    std::string exits;
    for (double e : exit_times) {
        std::snprintf(buf, sizeof(buf), " %.17g", e);
        exits += buf;
    }
    line("exit times:%s", exits.c_str());
    line("hamiltonian value h: %.17g", hamiltonian_value);
    for (const auto& c : checks) {
        line("check: %-42s measured=%-13.6g threshold=%-9.3g %s%s%s", c.name.c_str(), c.measured,
             c.threshold, c.pass ? "PASS" : "FAIL", c.note.empty() ? "" : "  # ",
             c.note.c_str());
    }
    line("overall: %s", all_pass ? "PASS" : "FAIL");
    return out;
}

std::vector<std::vector<double>> adjoint_grid_rows(const EnsembleFlow& flow,
                                                   const AdjointSolution& adj,
                                                   std::size_t grid_n) {
    const ModelParams& p = flow.params();
    std::vector<std::vector<double>> rows;
    rows.reserve(grid_n);
    for (std::size_t i = 0; i < grid_n; ++i) {
        const double t = p.t0 + (p.t1 - p.t0) * static_cast<double>(i) / (grid_n - 1);
        std::vector<double> row{t};
        double phin = 0.0;
        for (std::size_t k = 0; k < flow.size(); ++k) {
            row.push_back(0.0);  // psi1
            row.push_back(adj.particles[k].psi2(t));
            row.push_back(adj.particles[k].psi3(t));
            phin += p.velocity_b(flow.path(k).maturity(t)) * adj.particles[k].phi(t);
        }
        for (std::size_t k = 0; k < flow.size(); ++k) row.push_back(adj.particles[k].phi(t));
        row.push_back(phin);
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace folopt
