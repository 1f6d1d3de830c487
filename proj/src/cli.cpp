#include "folopt/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <ostream>

#include "folopt/adjoint.hpp"
#include "folopt/config.hpp"
#include "folopt/csv.hpp"
#include "folopt/dirac.hpp"
#include "folopt/measure.hpp"
#include "folopt/mollify.hpp"
#include "folopt/optimize.hpp"
#include "folopt/svg.hpp"

namespace folopt {

namespace {

namespace fs = std::filesystem;

struct RunContext {
    Config cfg;
    ModelParams params;
    ParamsReport report;
    fs::path out_dir;
    std::string hash;
    long grid_override = 0;
    std::uint64_t seed = kDefaultFalsifySeed;
    unsigned threads = 0;

    std::vector<std::string> stamp() const {
        return {std::string("folopt ") + kToolVersion, "config " + hash};
    }
    std::string stamp_text() const {
        std::string s;
        for (const auto& line : stamp()) s += "# " + line + "\n";
        return s;
    }
};

struct Problem {
    std::optional<Ensemble> ensemble;
    std::optional<InitialMeasure> measure;
};

fs::path resolve(const Config& cfg, const std::string& path) {
    fs::path p(path);
    if (p.is_absolute()) return p;
    return fs::path(cfg.origin()).parent_path() / p;
}

Problem load_problem(const RunContext& ctx) {
    Problem prob;
    const bool has_ens = ctx.cfg.has("problem.ensemble");
    const bool has_den = ctx.cfg.has("problem.density");
    if (has_ens == has_den)
        throw std::runtime_error(ctx.cfg.origin() +
                                 ": [problem] must set exactly one of ensemble/density");
    if (has_ens) {
        Ensemble ens =
            read_ensemble_csv(resolve(ctx.cfg, ctx.cfg.get_string("problem.ensemble")).string());
        ens.validate(ctx.params);
        prob.ensemble = std::move(ens);
    } else {
        DensityGrid grid =
            read_density_csv(resolve(ctx.cfg, ctx.cfg.get_string("problem.density")).string());
        const auto nx = static_cast<std::size_t>(ctx.cfg.get_int("problem.quad_nx", 64));
        const auto ny = static_cast<std::size_t>(ctx.cfg.get_int("problem.quad_ny", 64));
        prob.measure = InitialMeasure::density(std::move(grid), nx, ny);
    }
    return prob;
}

/// Control specs: "w", "one", a number (constant), "bang@<t>",
/// "bang@exit0" (switch at the exit time of y0=0 under u=w).
StepControl control_from_spec(const RunContext& ctx, const std::string& spec) {
    const ModelParams& p = ctx.params;
    if (spec == "w") return StepControl::constant(p.w, p.t0);
    if (spec == "one" || spec == "1") return StepControl::constant(1.0, p.t0);
    if (spec.rfind("bang@", 0) == 0) {
        const std::string arg = spec.substr(5);
        double tstar = 0.0;
        if (arg == "exit0") {
            tstar = exit_time(p, 0.0, StepControl::constant(p.w, p.t0));
        } else {
            try {
                std::size_t used = 0;
                tstar = std::stod(arg, &used);
                if (used != arg.size()) throw std::invalid_argument(arg);
            } catch (const std::exception&) {
                throw std::runtime_error("bad control spec '" + spec + "'");
            }
        }
        return StepControl::bang_bang(p, tstar);
    }
    try {
        std::size_t used = 0;
        const double v = std::stod(spec, &used);
        if (used != spec.size()) throw std::invalid_argument(spec);
        return StepControl::constant(v, p.t0);
    } catch (const std::exception&) {
        throw std::runtime_error("bad control spec '" + spec + "'");
    }
}

long pick_grid(const RunContext& ctx, const char* key, long fallback) {
    if (ctx.grid_override > 0) return ctx.grid_override;
    return ctx.cfg.get_int(key, fallback);
}

void write_report(const RunContext& ctx, const std::string& name, const std::string& body) {
    write_text_file((ctx.out_dir / name).string(), ctx.stamp_text() + body);
}

int cmd_simulate(const RunContext& ctx, std::ostream& out) {
    const ModelParams& p = ctx.params;
    const Problem prob = load_problem(ctx);
    const StepControl u =
        control_from_spec(ctx, ctx.cfg.get_string("simulate.control", "w"));
    require_admissible(p, u);
    const long grid = pick_grid(ctx, "simulate.grid", 2001);
    if (grid < 2) throw std::runtime_error("simulate: grid must be at least 2");

    char buf[256];
    std::string rep;
    auto line = [&](const char* fmt, auto... args) {
        if constexpr (sizeof...(args) == 0)
            std::snprintf(buf, sizeof(buf), "%s", fmt);
        else
            std::snprintf(buf, sizeof(buf), fmt, args...);
        rep += buf;
        rep += '\n';
    };

    if (prob.ensemble) {
        const EnsembleFlow flow = simulate(p, *prob.ensemble, u);
        std::vector<std::string> header{"t"};
        for (std::size_t k = 1; k <= flow.size(); ++k) {
            header.push_back("x1_" + std::to_string(k));
            header.push_back("x2_" + std::to_string(k));
            header.push_back("x3_" + std::to_string(k));
        }
        std::vector<std::vector<double>> rows, moments;
        for (long i = 0; i < grid; ++i) {
            const double t = p.t0 + (p.t1 - p.t0) * static_cast<double>(i) / (grid - 1);
            std::vector<double> row{t};
            double mass = 0.0;
            for (std::size_t k = 0; k < flow.size(); ++k) {
                const auto x = flow.path(k).state(t);
                row.insert(row.end(), {x[0], x[1], x[2]});
                mass += x[2];
            }
            rows.push_back(std::move(row));
            moments.push_back({t, mass, flow.maturity_moment(t)});
        }
        write_csv((ctx.out_dir / "trajectory.csv").string(), ctx.stamp(), header, rows);
        write_csv((ctx.out_dir / "moments.csv").string(), ctx.stamp(), {"t", "mass", "M"},
                  moments);

        line("problem: %zu particles", flow.size());
        for (std::size_t k = 0; k < flow.size(); ++k) {
            const double e = flow.path(k).exit_time();
            if (e <= p.t1)
                line("exit time particle %zu: %.17g", k + 1, e);
            else
                line("exit time particle %zu: not exited (sentinel %.17g)", k + 1, e);
        }
        line("cost J: %.17g", cost(flow));
        line("M(t0): %.17g", flow.maturity_moment(p.t0));
        line("M(t1): %.17g", flow.maturity_moment(p.t1));
    } else {
        const InitialMeasure& rho0 = *prob.measure;
        std::vector<std::vector<double>> moments;
        for (long i = 0; i < grid; ++i) {
            const double t = p.t0 + (p.t1 - p.t0) * static_cast<double>(i) / (grid - 1);
            moments.push_back({t, measure_mass(p, rho0, u, t),
                               measure_maturity_moment(p, rho0, u, t)});
        }
        write_csv((ctx.out_dir / "moments.csv").string(), ctx.stamp(), {"t", "mass", "M"},
                  moments);
        std::size_t not_exited = 0;
        for (const auto& q : rho0.y_marginal())
            if (exit_time(p, q.y, u) > p.t1) ++not_exited;
        line("problem: density, %zu quadrature points", rho0.points().size());
        line("cost J: %.17g", cost_measure(p, rho0, u, ctx.threads));
        line("mass(t0): %.17g", rho0.total_mass());
        line("mass(t1): %.17g", measure_mass(p, rho0, u, p.t1));
        line("M(t1): %.17g", measure_maturity_moment(p, rho0, u, p.t1));
        if (not_exited > 0)
            line("warning: %zu of %zu maturity nodes do not exit by t1 (min(e, t1) convention)",
                 not_exited, rho0.y_marginal().size());
    }
    write_report(ctx, "report.txt", rep);
    out << rep;
    return 0;
}

int cmd_sweep(const RunContext& ctx, std::ostream& out) {
    const ModelParams& p = ctx.params;
    const Problem prob = load_problem(ctx);
    const SweepProblem sp = prob.ensemble ? make_sweep_problem(p, *prob.ensemble)
                                          : make_sweep_problem(p, *prob.measure);
    const long grid = pick_grid(ctx, "sweep.grid", 1024);
    if (grid < 2) throw std::runtime_error("sweep: grid must be at least 2");

    const SweepResult swept = sweep(p, sp, static_cast<std::size_t>(grid), ctx.threads);
    const RefineResult refined = refine(sp, swept);

    std::vector<std::vector<double>> rows;
    std::vector<double> xs, ys;
    for (const auto& q : swept.points) {
        rows.push_back({q.tstar, q.j, static_cast<double>(q.segment)});
        xs.push_back(q.tstar);
        ys.push_back(q.j);
    }
    write_csv((ctx.out_dir / "sweep.csv").string(), ctx.stamp(),
              {"t_star", "J", "segment_index"}, rows);

    SvgCurve curve;
    curve.x = xs;
    curve.y = ys;
    curve.verticals = swept.boundaries;
    curve.title = "cost of switching at t_star (verticals: exit times under u = w)";
    curve.xlabel = "t_star";
    curve.ylabel = "J";
    write_text_file((ctx.out_dir / "sweep.svg").string(), render_svg(curve));

    char buf[256];
    std::string rep;
    auto line = [&](const char* fmt, auto... args) {
        if constexpr (sizeof...(args) == 0)
            std::snprintf(buf, sizeof(buf), "%s", fmt);
        else
            std::snprintf(buf, sizeof(buf), fmt, args...);
        rep += buf;
        rep += '\n';
    };
    line("grid points: %ld", grid);
    line("theorem conditions: %s", swept.theorem_conditions ? "satisfied" : "not satisfied");
    for (double b : swept.boundaries) line("segment boundary (exit under u=w): %.17g", b);
    line("argmin t_star: %.17g", refined.tstar);
    line("J_min: %.17g", refined.j);
    line("certified local minimum: %s", refined.local_min ? "yes" : "no");
    for (const auto& c : refined.candidates)
        line("candidate: t_star=%.17g J=%.17g segment=%d", c.tstar, c.j, c.segment);
    line("reverse family best: t_star=%.17g J=%.17g (%s)", swept.reverse_tstar_best,
         swept.reverse_j_best,
         swept.reverse_never_beats ? "never beats forward" : "BEATS FORWARD");

    bool failed = swept.theorem_conditions && !swept.reverse_never_beats;

    const long trials = ctx.cfg.get_int("sweep.falsify_trials", 0);
    if (trials > 0) {
        if (!prob.ensemble)
            throw std::runtime_error("sweep: falsification requires an ensemble problem");
        const FalsifyReport fr = falsify_with_step_controls(
            p, *prob.ensemble, static_cast<std::size_t>(trials), ctx.seed, refined.j, ctx.threads);
        line("falsification trials: %zu (seed %llu)", fr.trials,
             static_cast<unsigned long long>(fr.seed));
        line("falsification worst margin: %.17g", fr.worst_margin);
        line("falsification violations: %zu", fr.violations);
        failed = failed || fr.violations > 0;
    }
    write_report(ctx, "report.txt", rep);
    out << rep;
    return failed ? 1 : 0;
}

int cmd_verify(const RunContext& ctx, std::ostream& out) {
    const ModelParams& p = ctx.params;
    const Problem prob = load_problem(ctx);
    if (!prob.ensemble)
        throw std::runtime_error("verify: certification requires an ensemble problem");

    const std::string spec = ctx.cfg.get_string("verify.tstar", "sweep");
    double tstar = 0.0;
    if (spec == "sweep") {
        const SweepProblem sp = make_sweep_problem(p, *prob.ensemble);
        const long grid = ctx.cfg.get_int("sweep.grid", 1024);
        tstar = refine(sp, sweep(p, sp, static_cast<std::size_t>(grid), ctx.threads)).tstar;
    } else if (spec == "exit0") {
        tstar = exit_time(p, 0.0, StepControl::constant(p.w, p.t0));
    } else {
        try {
            std::size_t used = 0;
            tstar = std::stod(spec, &used);
            if (used != spec.size()) throw std::invalid_argument(spec);
        } catch (const std::exception&) {
            throw std::runtime_error("verify: bad tstar spec '" + spec + "'");
        }
    }

    AdjointOptions opt;
    opt.grid_n = static_cast<std::size_t>(pick_grid(ctx, "verify.grid", 2001));
    const Certificate cert = certify_bang_bang(p, *prob.ensemble, tstar, opt);
    write_report(ctx, "certificate.txt", cert.text());
    out << cert.text();

    if (ctx.cfg.get_bool("verify.dump_adjoints", false)) {
        const EnsembleFlow flow = simulate(p, *prob.ensemble, StepControl::bang_bang(p, tstar));
        const AdjointSolution adj = backward_adjoint(flow, opt);
        std::vector<std::string> header{"t"};
        for (std::size_t k = 1; k <= flow.size(); ++k) {
            header.push_back("psi1_" + std::to_string(k));
            header.push_back("psi2_" + std::to_string(k));
            header.push_back("psi3_" + std::to_string(k));
        }
        for (std::size_t k = 1; k <= flow.size(); ++k) header.push_back("phi_" + std::to_string(k));
        header.push_back("phi_N");
        write_csv((ctx.out_dir / "adjoints.csv").string(), ctx.stamp(), header,
                  adjoint_grid_rows(flow, adj, opt.grid_n));
    }
    return cert.hypotheses && !cert.all_pass ? 1 : 0;
}

int cmd_converge(const RunContext& ctx, std::ostream& out) {
    const ModelParams& p = ctx.params;
    const Problem prob = load_problem(ctx);
    const StepControl u =
        control_from_spec(ctx, ctx.cfg.get_string("converge.control", "bang@exit0"));
    require_admissible(p, u);

    char buf[256];
    std::string rep;
    auto line = [&](const char* fmt, auto... args) {
        if constexpr (sizeof...(args) == 0)
            std::snprintf(buf, sizeof(buf), "%s", fmt);
        else
            std::snprintf(buf, sizeof(buf), fmt, args...);
        rep += buf;
        rep += '\n';
    };
    bool failed = false;

    if (prob.measure) {
        std::vector<double> levels{16, 64, 256, 1024};
        if (ctx.cfg.has("converge.levels")) levels = ctx.cfg.get_list("converge.levels");
        const auto ref_nx = static_cast<std::size_t>(ctx.cfg.get_int("converge.ref_nx", 100));
        const auto ref_ny = static_cast<std::size_t>(ctx.cfg.get_int("converge.ref_ny", 100));
        const InitialMeasure ref =
            InitialMeasure::density(prob.measure->grid(), ref_nx, ref_ny);
        const double j_ref = cost_measure(p, ref, u, ctx.threads);

        std::vector<std::vector<double>> rows;
        double prev_err = std::numeric_limits<double>::infinity();
        bool decreasing = true;
        for (std::size_t lvl = 0; lvl < levels.size(); ++lvl) {
            const auto n = static_cast<std::size_t>(levels[lvl]);
            const InitialMeasure part = discretize(*prob.measure, n);
            const double j = cost(p, to_ensemble(part), u);
            const double err = std::abs(j - j_ref);
            rows.push_back({static_cast<double>(lvl), static_cast<double>(n), j, err});
            if (err > prev_err) decreasing = false;
            prev_err = err;
        }
        write_csv((ctx.out_dir / "dirac_limit.csv").string(), ctx.stamp(),
                  {"level", "n", "J", "abs_err"}, rows);
        line("dirac limit: J_ref=%.17g (%zux%zu reference rule)", j_ref, ref_nx, ref_ny);
        line("dirac limit error decreasing: %s", decreasing ? "yes" : "no");
        failed = failed || !decreasing;
    } else {
        line("dirac limit study skipped: problem is already a Dirac ensemble");
    }

    {
        Particle q{0.0, 0.0, 1.0};
        if (prob.ensemble) q = prob.ensemble->particles.front();
        std::vector<int> schedule{100, 1000, 10000, 100000};
        if (ctx.cfg.has("converge.ischedule")) {
            schedule.clear();
            for (double v : ctx.cfg.get_list("converge.ischedule"))
                schedule.push_back(static_cast<int>(v));
        }
        const BracketConvergenceReport br = jump_bracket_convergence(p, q, u, schedule);
        std::vector<std::vector<double>> rows;
        for (const auto& r : br.rows)
            rows.push_back({r.index, r.a_term, r.delta, r.bracket_lo, r.bracket_hi,
                            r.inside ? 1.0 : 0.0, r.layer_width});
        write_csv((ctx.out_dir / "mollifier.csv").string(), ctx.stamp(),
                  {"i", "A_i", "Delta_i", "bracket_lo", "bracket_hi", "inside", "layer_width"},
                  rows);
        line("mollifier study: A(i) log-log slope %.6g, decreasing: %s", br.a_rate_slope,
             br.a_decreasing ? "yes" : "no");
        line("mollifier study: largest two i inside inflated bracket: %s",
             br.largest_two_inside ? "yes" : "no");
        failed = failed || !br.largest_two_inside || !br.a_decreasing;
    }

    write_report(ctx, "report.txt", rep);
    out << rep;
    return failed ? 1 : 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"hybrid optimal control of the follicle maturation model"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    long grid = 0;
    std::uint64_t seed = kDefaultFalsifySeed;
    unsigned threads = 0;

    const char* descs[4][2] = {
        {"simulate", "forward dynamics: trajectories, moments, cost"},
        {"sweep", "switching-time sweep, refinement and optional falsification"},
        {"verify", "first-order certificate for a bang-bang candidate"},
        {"converge", "Dirac-limit and mollifier convergence studies"}};
    std::vector<CLI::App*> subs;
    for (const auto& d : descs) {
        CLI::App* sub = app.add_subcommand(d[0], d[1]);
        sub->add_option("--config", config_path, "experiment config file")->required();
        sub->add_option("--out", out_dir, "output directory (default: out)");
        sub->add_option("--grid", grid, "override the command's grid size");
        sub->add_option("--seed", seed, "seed for randomized trials");
        sub->add_option("--threads", threads, "worker cap (0 = all cores)");
        subs.push_back(sub);
    }

    std::vector<std::string> argv_order(args.rbegin(), args.rend());
    try {
        app.parse(argv_order);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        RunContext ctx{Config::load(config_path),
                       ModelParams{},
                       ParamsReport{},
                       fs::path(out_dir),
                       "",
                       grid,
                       seed,
                       threads};
        ctx.hash = fnv1a_hex(ctx.cfg.text());
        ctx.params = params_from_config(ctx.cfg);
        ctx.report = validate(ctx.params);
        if (!ctx.report.valid) {
            std::string msg = "invalid parameters:";
            for (const auto& e : ctx.report.errors) msg += " " + e + ";";
            throw std::runtime_error(msg);
        }
        fs::create_directories(ctx.out_dir);

        if (subs[0]->parsed()) return cmd_simulate(ctx, out);
        if (subs[1]->parsed()) return cmd_sweep(ctx, out);
        if (subs[2]->parsed()) return cmd_verify(ctx, out);
        return cmd_converge(ctx, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace folopt
