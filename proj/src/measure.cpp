#include "folopt/measure.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "folopt/csv.hpp"
#include "folopt/flow.hpp"
#include "folopt/parallel.hpp"
#include "folopt/quadrature.hpp"

namespace folopt {

double DensityGrid::value_at(double x, double y) const {
    auto cell = [](double v, std::size_t n, double hi) {
        if (n == 1) return std::pair<std::size_t, double>{0, 0.0};
        const double s = std::clamp(v / hi, 0.0, 1.0) * static_cast<double>(n - 1);
        std::size_t i = std::min(static_cast<std::size_t>(s), n - 2);
        return std::pair<std::size_t, double>{i, s - static_cast<double>(i)};
    };
    const auto [ix, fx] = cell(x, nx, 1.0);
    const auto [iy, fy] = cell(y, ny, ys);
    auto at = [&](std::size_t i, std::size_t j) { return values[i * ny + j]; };
    if (nx == 1 && ny == 1) return at(0, 0);
    if (nx == 1) return (1.0 - fy) * at(0, iy) + fy * at(0, iy + 1);
    if (ny == 1) return (1.0 - fx) * at(ix, 0) + fx * at(ix + 1, 0);
    return (1.0 - fx) * ((1.0 - fy) * at(ix, iy) + fy * at(ix, iy + 1)) +
           fx * ((1.0 - fy) * at(ix + 1, iy) + fy * at(ix + 1, iy + 1));
}

void DensityGrid::validate() const {
    if (nx == 0 || ny == 0 || values.size() != nx * ny)
        throw std::invalid_argument("density grid: dimensions do not match the value count");
    if (!(ys > 0.0)) throw std::invalid_argument("density grid: ys must be positive");
    for (double v : values)
        if (!(v >= 0.0)) throw std::invalid_argument("density grid: values must be nonnegative");
}

InitialMeasure InitialMeasure::particles(std::vector<WeightedPoint> pts) {
    if (pts.empty()) throw std::invalid_argument("initial measure: no points");
    double mass = 0.0;
    for (const auto& q : pts) {
        if (!(q.mass > 0.0)) throw std::invalid_argument("initial measure: masses must be positive");
        if (q.x < 0.0 || q.x > 1.0 || q.y < 0.0)
            throw std::invalid_argument("initial measure: support must lie in [0,1] x [0,ys]");
        mass += q.mass;
    }
    if (!(mass > 0.0)) throw std::invalid_argument("initial measure: zero total mass");
    InitialMeasure m;
    m.points_ = std::move(pts);
    m.build_marginal();
    return m;
}

InitialMeasure InitialMeasure::density(DensityGrid grid, std::size_t quad_nx,
                                       std::size_t quad_ny) {
    grid.validate();
    const GaussRule gx(quad_nx), gy(quad_ny);
    InitialMeasure m;
    m.has_grid_ = true;
    m.grid_ = std::move(grid);
    const double ys = m.grid_.ys;
    for (std::size_t j = 0; j < quad_ny; ++j) {
        const double y = 0.5 * ys * (gy.nodes[j] + 1.0);
        const double wy = 0.5 * ys * gy.weights[j];
        for (std::size_t i = 0; i < quad_nx; ++i) {
            const double x = 0.5 * (gx.nodes[i] + 1.0);
            const double wx = 0.5 * gx.weights[i];
            const double mass = wx * wy * m.grid_.value_at(x, y);
            if (mass > 0.0) m.points_.push_back({x, y, mass});
        }
    }
    if (m.points_.empty())
        throw std::invalid_argument("initial measure: density is identically zero");
    m.build_marginal();
    return m;
}

void InitialMeasure::build_marginal() {
    std::map<double, double> acc;
    for (const auto& q : points_) acc[q.y] += q.mass;
    marginal_.clear();
    for (const auto& [y, mass] : acc) marginal_.push_back({0.0, y, mass});
}

double InitialMeasure::total_mass() const {
    std::vector<double> masses;
    masses.reserve(points_.size());
    for (const auto& q : points_) masses.push_back(q.mass);
    return pairwise_sum(masses);
}

const DensityGrid& InitialMeasure::grid() const {
    if (!has_grid_) throw std::logic_error("initial measure: no density grid attached");
    return grid_;
}

namespace {

void check_support(const ModelParams& p, const InitialMeasure& rho0) {
    for (const auto& q : rho0.points())
        if (q.y > p.ys)
            throw std::invalid_argument("initial measure: support exceeds the threshold maturity");
}

}  // namespace

double pushforward_integrate(const ModelParams& p, const InitialMeasure& rho0,
                             const StepControl& u, double t,
                             const std::function<double(double, double)>& phi,
                             unsigned threads) {
    require_valid(p);
    require_admissible(p, u);
    check_support(p, rho0);
    const auto& pts = rho0.points();
    std::vector<double> terms(pts.size());
    parallel_for(pts.size(), threads, [&](std::size_t i) {
        const WeightedPoint& q = pts[i];
        const double e = exit_time(p, q.y, u);
        const double growth = std::exp(p.cs * (std::min(t, e) - p.t0));
        terms[i] = q.mass * growth * phi(q.x + t - p.t0, maturation_flow(p, t, q.y, u));
    });
    return pairwise_sum(terms);
}

double measure_mass(const ModelParams& p, const InitialMeasure& rho0, const StepControl& u,
                    double t) {
    require_valid(p);
    require_admissible(p, u);
    check_support(p, rho0);
    const auto& marg = rho0.y_marginal();
    std::vector<double> terms(marg.size());
    for (std::size_t i = 0; i < marg.size(); ++i) {
        const double e = exit_time(p, marg[i].y, u);
        terms[i] = marg[i].mass * std::exp(p.cs * (std::min(t, e) - p.t0));
    }
    return pairwise_sum(terms);
}

double measure_maturity_moment(const ModelParams& p, const InitialMeasure& rho0,
                               const StepControl& u, double t) {
    require_valid(p);
    require_admissible(p, u);
    check_support(p, rho0);
    const auto& marg = rho0.y_marginal();
    std::vector<double> terms(marg.size());
    for (std::size_t i = 0; i < marg.size(); ++i) {
        const double e = exit_time(p, marg[i].y, u);
        terms[i] = marg[i].mass * std::exp(p.cs * (std::min(t, e) - p.t0)) *
                   maturation_flow(p, t, marg[i].y, u);
    }
    return pairwise_sum(terms);
}

double cost_measure(const ModelParams& p, const InitialMeasure& rho0, const StepControl& u,
                    unsigned threads) {
    require_valid(p);
    require_admissible(p, u);
    check_support(p, rho0);
    const auto& marg = rho0.y_marginal();
    std::vector<double> terms(marg.size());
    parallel_for(marg.size(), threads, [&](std::size_t i) {
        const double e = exit_time(p, marg[i].y, u);
        terms[i] = -marg[i].mass * maturation_flow(p, p.t1, marg[i].y, u) *
                   std::exp(p.cs * (std::min(e, p.t1) - p.t0));
    });
    return pairwise_sum(terms);
}

InitialMeasure discretize(const InitialMeasure& rho0, std::size_t n) {
    if (n == 0) throw std::invalid_argument("discretize: n must be positive");
    if (!rho0.from_density()) return rho0;  // particle form is already Dirac
    // Largest divisor of n not exceeding sqrt(n): tensor mx x my = n,
    // with the finer direction on the maturity axis (the cost only sees y).
    std::size_t d_small = 1;
    for (std::size_t d = 1; d * d <= n; ++d)
        if (n % d == 0) d_small = d;
    return InitialMeasure::density(rho0.grid(), d_small, n / d_small);
}

Ensemble to_ensemble(const InitialMeasure& rho0) {
    std::map<double, std::pair<double, double>> acc;  // y -> (mass, mass*x)
    for (const auto& q : rho0.points()) {
        auto& slot = acc[q.y];
        slot.first += q.mass;
        slot.second += q.mass * q.x;
    }
    Ensemble ens;
    for (const auto& [y, slot] : acc)
        ens.particles.push_back({slot.second / slot.first, y, slot.first});
    return ens;
}

DualityReport duality_check(const ModelParams& p, const InitialMeasure& rho0,
                            const StepControl& u, double t_ext, std::size_t grid_n) {
    require_valid(p);
    check_support(p, rho0);
    if (t_ext < p.t0 || t_ext > p.t1)
        throw std::invalid_argument("duality_check: extension start outside [t0, t1]");
    // Support below the asymptotic maturity is implied by the [0, ys]
    // support condition (ys < ybar for any valid parameter set).
    DualityReport rep;
    if (t_ext == p.t1) {
        // Empty extension: nothing to verify.
        rep.t = {p.t1};
        rep.moment = {measure_maturity_moment(p, rho0, u, p.t1)};
        rep.strictly_increasing = true;
        return rep;
    }

    std::vector<double> times = u.breakpoints();
    std::vector<double> values = u.values();
    for (double t : times)
        if (t > p.t0 && t >= t_ext)
            throw std::invalid_argument("duality_check: control must live on [t0, t_ext]");
    StepControl extended = StepControl::constant(1.0, p.t0);
    if (t_ext > p.t0) {
        times.push_back(t_ext);
        values.push_back(1.0);
        extended = StepControl(times, values);
    }

    rep.t.resize(grid_n);
    rep.moment.resize(grid_n);
    for (std::size_t i = 0; i < grid_n; ++i) {
        const double t = t_ext + (p.t1 - t_ext) * static_cast<double>(i) /
                                     static_cast<double>(grid_n - 1);
        rep.t[i] = t;
        rep.moment[i] = measure_maturity_moment(p, rho0, extended, t);
    }
    rep.min_increment = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < grid_n; ++i)
        rep.min_increment = std::min(rep.min_increment, rep.moment[i + 1] - rep.moment[i]);
    rep.strictly_increasing = rep.min_increment > 0.0;
    return rep;
}

ExitContinuityReport exit_time_continuity_probe(
    const ModelParams& p, const std::vector<std::pair<double, StepControl>>& sequence,
    const std::vector<double>& labels, double y0_limit, const StepControl& u_limit) {
    ExitContinuityReport rep;
    rep.exit_limit = exit_time(p, y0_limit, u_limit);
    for (std::size_t i = 0; i < sequence.size(); ++i) {
        ContinuityRow row;
        row.parameter = i < labels.size() ? labels[i] : static_cast<double>(i);
        row.exit = exit_time(p, sequence[i].first, sequence[i].second);
        row.error = std::abs(row.exit - rep.exit_limit);
        rep.rows.push_back(row);
    }
    rep.errors_decreasing = rep.rows.size() >= 2;
    for (std::size_t i = 0; i + 1 < rep.rows.size(); ++i)
        if (rep.rows[i + 1].error > rep.rows[i].error) rep.errors_decreasing = false;
    return rep;
}

StepControl chattering_control(const ModelParams& p, int n, double ubar) {
    if (n < 1) throw std::invalid_argument("chattering_control: n must be positive");
    if (ubar < p.w || ubar > 1.0)
        throw std::invalid_argument("chattering_control: mean outside [w, 1]");
    if (ubar == p.w) return StepControl::constant(p.w, p.t0);
    if (ubar == 1.0) return StepControl::constant(1.0, p.t0);
    const double width = 1.0 / static_cast<double>(n);
    const double theta = (1.0 - ubar) / (1.0 - p.w);  // fraction of each cell at w
    std::vector<double> times, values;
    double t = p.t0;
    while (t < p.t1) {
        const double mid = t + theta * width;
        times.push_back(t);
        values.push_back(p.w);
        if (mid >= p.t1) break;
        times.push_back(mid);
        values.push_back(1.0);
        t += width;
    }
    return StepControl(times, values);
}

DensityGrid read_density_csv(const std::string& path) {
    // Header "nx,ny,ys", one dimension row, then nx*ny row-major values
    // on as many lines as convenient.
    const std::string text = read_text_file(path);
    DensityGrid g;
    std::size_t lineno = 0;
    int stage = 0;  // 0: header, 1: dims, 2: values
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t eol = text.find('\n', pos);
        std::string line = text.substr(pos, eol == std::string::npos ? eol : eol - pos);
        pos = eol == std::string::npos ? text.size() + 1 : eol + 1;
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const std::string at = path + ":" + std::to_string(lineno);
        if (stage == 0) {
            std::string squashed;
            for (char c : line)
                if (c != ' ' && c != '\t') squashed += c;
            if (squashed != "nx,ny,ys") throw std::runtime_error(at + ": expected header nx,ny,ys");
            stage = 1;
            continue;
        }
        std::vector<double> nums;
        std::string field;
        auto flush = [&]() {
            if (field.empty()) return;
            try {
                std::size_t used = 0;
                nums.push_back(std::stod(field, &used));
                if (used != field.size()) throw std::invalid_argument(field);
            } catch (const std::exception&) {
                throw std::runtime_error(at + ": cannot parse number '" + field + "'");
            }
            field.clear();
        };
        for (char c : line) {
            if (c == ',') {
                flush();
            } else if (c != ' ' && c != '\t') {
                field += c;
            }
        }
        flush();
        if (stage == 1) {
            if (nums.size() != 3) throw std::runtime_error(at + ": expected nx,ny,ys values");
            g.nx = static_cast<std::size_t>(nums[0]);
            g.ny = static_cast<std::size_t>(nums[1]);
            g.ys = nums[2];
            stage = 2;
            continue;
        }
        for (double v : nums) g.values.push_back(v);
    }
    if (stage != 2) throw std::runtime_error(path + ": missing density data");
    g.validate();
    return g;
}

}  // namespace folopt
