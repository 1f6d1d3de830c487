#include "folopt/mollify.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "folopt/adjoint.hpp"
#include "folopt/flow.hpp"
#include "folopt/quadrature.hpp"

namespace folopt {

namespace {

template <std::size_t N>
void append_piece(OdeSolution<N>& dst, const OdeSolution<N>& piece) {
    if (dst.t.empty()) {
        dst = piece;
        return;
    }
    for (std::size_t i = 1; i < piece.t.size(); ++i) {
        dst.t.push_back(piece.t[i]);
        dst.y.push_back(piece.y[i]);
        dst.f.push_back(piece.f[i]);
    }
}

// Ascending stitch of pieces solved backward (each piece is stored
// ascending already; pieces arrive in descending time order).
template <std::size_t N>
OdeSolution<N> stitch_backward(std::vector<OdeSolution<N>> pieces) {
    OdeSolution<N> out;
    for (auto it = pieces.rbegin(); it != pieces.rend(); ++it) append_piece(out, *it);
    return out;
}

}  // namespace

RegularizedFlow simulate_regularized(const ModelParams& p, int index, const Particle& q,
                                     const StepControl& u, const OdeOptions& opt) {
    require_valid(p);
    require_admissible(p, u);
    if (index > kMaxMollifierIndex)
        throw std::invalid_argument("mollifier index beyond the supported cap");
    const Mollifier moll(index, p.ys);

    RegularizedFlow flow;
    flow.init = q;
    flow.index = index;
    const double lower = std::max(0.0, moll.layer_lower());
    flow.t_layer_enter = q.x2 >= lower ? p.t0 : threshold_time(p, q.x2, u, lower);
    flow.t_layer_exit = q.x2 >= p.ys ? p.t0 : exit_time(p, q.x2, u);

    auto rhs = [&](double t, const std::array<double, 2>& x, std::array<double, 2>& dx) {
        dx[0] = p.velocity(x[0], u(t));
        dx[1] = p.cs * moll.chi(x[0]) * x[1];
    };

    // Solve in phases so the thin layer gets its own capped mesh; the
    // dynamics is smooth but the gain varies on the 1/i scale there.
    std::vector<double> cuts;
    if (flow.t_layer_enter > p.t0 && flow.t_layer_enter < p.t1)
        cuts.push_back(flow.t_layer_enter);
    if (flow.t_layer_exit > p.t0 && flow.t_layer_exit < p.t1) cuts.push_back(flow.t_layer_exit);
    cuts.push_back(p.t1);

    std::array<double, 2> y{q.x2, q.x3};
    double t = p.t0;
    for (double stop : cuts) {
        if (stop <= t) continue;
        OdeOptions phase = opt;
        const bool in_layer = t >= flow.t_layer_enter - 1e-300 && stop <= flow.t_layer_exit;
        if (in_layer) phase.max_step = std::max((stop - t) / 32.0, 1e-14);
        auto piece = integrate<2>(rhs, t, stop, y, phase, u.breakpoints_within(t, stop));
        y = piece.y.back();
        t = stop;
        append_piece(flow.sol, piece);
    }
    return flow;
}

RegularizedAdjoint adjoint_regularized(const ModelParams& p, const RegularizedFlow& flow,
                                       const StepControl& u, const OdeOptions& opt) {
    const Mollifier moll(flow.index, p.ys);
    auto rhs = [&](double t, const std::array<double, 2>& s, std::array<double, 2>& ds) {
        const auto x = flow.sol.eval(t);
        const double y = x[0], x3 = x[1];
        const double uv = u(t);
        const double slope = -(-2.0 * y + p.c1 * uv);  // -(a' + b'u)
        const double chi = moll.chi(y);
        const double chip = moll.chi_prime(y);
        ds[0] = slope * (s[0] + x3) - p.cs * chip * x3 * s[1] - p.cs * chi * x3 -
                p.cs * y * chip * x3;
        ds[1] = -p.cs * chi * s[1] - p.velocity(y, uv) - p.cs * y * chi;
    };

    std::vector<double> cuts;  // descending stops for the backward pass
    if (flow.t_layer_exit > p.t0 && flow.t_layer_exit < p.t1) cuts.push_back(flow.t_layer_exit);
    if (flow.t_layer_enter > p.t0 && flow.t_layer_enter < p.t1)
        cuts.push_back(flow.t_layer_enter);
    std::sort(cuts.rbegin(), cuts.rend());
    cuts.push_back(p.t0);

    std::vector<OdeSolution<2>> pieces;
    std::array<double, 2> s{0.0, 0.0};
    double t = p.t1;
    for (double stop : cuts) {
        if (stop >= t) continue;
        OdeOptions phase = opt;
        const bool in_layer = t <= flow.t_layer_exit + 1e-300 && stop >= flow.t_layer_enter;
        if (in_layer) phase.max_step = std::max((t - stop) / 32.0, 1e-14);
        auto piece = integrate<2>(rhs, t, stop, s, phase, u.breakpoints_within(stop, t));
        s = piece.y.front();  // ascending storage: front is the new endpoint
        t = stop;
        pieces.push_back(std::move(piece));
    }
    RegularizedAdjoint adj;
    adj.sol = stitch_backward(std::move(pieces));
    return adj;
}

double ramp_reference(const ModelParams& p, int index, double tstar, double t) {
    const double width = 1.0 / static_cast<double>(index);
    const double s = (t - (tstar - width)) / width;
    if (s <= 0.0) return p.w;
    if (s >= 1.0) return 1.0;
    const double smooth = s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
    return p.w + (1.0 - p.w) * smooth;
}

double cost_regularized(const ModelParams& p, int index, const Particle& q, const StepControl& u,
                        double tstar_reference, const OdeOptions& opt) {
    const RegularizedFlow flow = simulate_regularized(p, index, q, u, opt);
    const Mollifier moll(index, p.ys);

    // Smooth pieces: control breakpoints plus the layer boundaries.
    std::vector<double> cuts = u.breakpoints_within(p.t0, p.t1);
    for (double c : {flow.t_layer_enter, flow.t_layer_exit})
        if (c > p.t0 && c < p.t1) cuts.push_back(c);
    const double width = 1.0 / static_cast<double>(index);
    for (double c : {tstar_reference - width, tstar_reference})
        if (c > p.t0 && c < p.t1) cuts.push_back(c);
    cuts.push_back(p.t0);
    cuts.push_back(p.t1);
    std::sort(cuts.begin(), cuts.end());

    double run = 0.0, penalty = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double a = cuts[i], b = cuts[i + 1];
        if (b <= a) continue;
        const double max_len = std::min(0.5, std::max((b - a) / 8.0, 1e-12));
        run += integrate_smooth(
            a, b,
            [&](double t) {
                const auto x = flow.sol.eval(t);
                return -(p.velocity(x[0], u(t)) + p.cs * moll.chi(x[0]) * x[0]) * x[1];
            },
            max_len);
        penalty += integrate_smooth(
            a, b,
            [&](double t) {
                const double d = u(t) - ramp_reference(p, index, tstar_reference, t);
                return d * d;
            },
            max_len);
    }
    return run + penalty / std::sqrt(static_cast<double>(index)) - q.x2 * q.x3;
}

BracketConvergenceReport jump_bracket_convergence(const ModelParams& p, const Particle& q,
                                                  const StepControl& u,
                                                  const std::vector<int>& schedule,
                                                  const OdeOptions& opt) {
    require_valid(p);
    // Hybrid reference: exit time, bracket endpoints.
    Ensemble ens;
    ens.particles.push_back(q);
    const EnsembleFlow hybrid = simulate(p, ens, u);
    const double exit = hybrid.path(0).exit_time();
    if (!(exit > p.t0 && exit < p.t1))
        throw std::invalid_argument(
            "jump_bracket_convergence: the hybrid trajectory must exit inside (t0, t1)");
    const AdjointSolution hybrid_adj = backward_adjoint(hybrid);
    const double lo = hybrid_adj.particles[0].bracket_lo;
    const double hi = hybrid_adj.particles[0].bracket_hi;

    std::vector<int> sched = schedule;
    std::sort(sched.begin(), sched.end());
    sched.erase(std::unique(sched.begin(), sched.end()), sched.end());

    BracketConvergenceReport rep;
    for (int i : sched) {
        const RegularizedFlow flow = simulate_regularized(p, i, q, u, opt);
        const RegularizedAdjoint adj = adjoint_regularized(p, flow, u, opt);
        BracketRow row;
        row.index = static_cast<double>(i);
        row.bracket_lo = lo;
        row.bracket_hi = hi;
        row.layer_width = flow.t_layer_exit - flow.t_layer_enter;

        const double tbar = flow.t_layer_enter;
        const double that = flow.t_layer_exit;
        row.delta = adj.sol.eval(that, 0) - adj.sol.eval(tbar, 0);

        const Mollifier moll(i, p.ys);
        row.a_term = -integrate_smooth(
            tbar, that,
            [&](double t) {
                const auto x = flow.sol.eval(t);
                const auto s = adj.sol.eval(t);
                const double uv = u(t);
                return (-2.0 * x[0] + p.c1 * uv) * (s[0] + x[1]) +
                       p.cs * moll.chi(x[0]) * x[1];
            },
            std::max(row.layer_width / 64.0, 1e-14));
        row.b_term = -integrate_smooth(
            tbar, that,
            [&](double t) {
                const auto x = flow.sol.eval(t);
                const auto s = adj.sol.eval(t);
                return p.cs * x[1] * (x[0] + s[1]) * moll.chi_prime(x[0]);
            },
            std::max(row.layer_width / 64.0, 1e-14));
        row.split_residual = std::abs(row.delta - (row.a_term + row.b_term));

        const double inflate = 10.0 / static_cast<double>(i);
        row.inside = row.delta >= lo - inflate && row.delta <= hi + inflate;
        rep.rows.push_back(row);
    }

    // Log-log least squares for the decay rate of |A(i)|.
    const std::size_t n = rep.rows.size();
    if (n >= 2) {
        double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
        for (const auto& r : rep.rows) {
            const double x = std::log(r.index);
            const double y = std::log(std::max(std::abs(r.a_term), 1e-300));
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        const double dn = static_cast<double>(n);
        rep.a_rate_slope = (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
    }
    rep.a_decreasing = n >= 2;
    for (std::size_t i = 0; i + 1 < n; ++i)
        if (std::abs(rep.rows[i + 1].a_term) >= std::abs(rep.rows[i].a_term))
            rep.a_decreasing = false;
    rep.largest_two_inside = n >= 2 && rep.rows[n - 1].inside && rep.rows[n - 2].inside;
    return rep;
}

}  // namespace folopt
