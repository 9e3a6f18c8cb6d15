#include "bmfg/lq.hpp"

#include "bmfg/csv.hpp"
#include "bmfg/errors.hpp"
#include "bmfg/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <fmt/format.h>

namespace bmfg {

void LQParams::validate() const {
    auto require = [](bool ok, const char* name, const char* rule, double value) {
        if (!ok) throw ConfigError(fmt::format("{} must be {} (got {})", name, rule, value));
    };
    require(T > 0.0 && std::isfinite(T), "T", "positive", T);
    require(gamma > 0.0 && std::isfinite(gamma), "gamma", "positive", gamma);
    require(lambda >= 0.0 && std::isfinite(lambda), "lambda", "non-negative", lambda);
    require(delta > 0.0 && std::isfinite(delta), "delta", "positive", delta);
    require(std::isfinite(x0), "x0", "finite", x0);
    require(std::isfinite(rho0), "rho0", "finite", rho0);
    require(v0 > 0.0 && std::isfinite(v0), "v0", "positive", v0);
    require(ode_steps >= 100, "ode_steps", "at least 100", static_cast<double>(ode_steps));
}

double a_coeff(double t, const LQParams& p) {
    const double tau = p.T - t;
    const double k = 1.0 + p.delta;
    // (1+delta+gamma) e^{gamma tau} - (1+delta), rearranged to stay accurate as gamma -> 0
    const double denom = k * std::expm1(p.gamma * tau) + p.gamma * std::exp(p.gamma * tau);
    return p.gamma * k / denom;
}

namespace {

double rk4_step(const LQParams& p, const std::function<double(double)>& a, double t, double v, double h) {
    auto rhs = [&](double s, double y) { return 2.0 * p.lambda * y * y - 2.0 * a(s) * y + 2.0; };
    const double k1 = rhs(t, v);
    const double k2 = rhs(t + 0.5 * h, v + 0.5 * h * k1);
    const double k3 = rhs(t + 0.5 * h, v + 0.5 * h * k2);
    const double k4 = rhs(t + h, v + h * k3);
    return v + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

bool blown(double v) { return !std::isfinite(v) || v > kBlowupThreshold; }

// Cumulative trapezoid of samples y on a uniform grid of spacing h.
std::vector<double> cumulative(const std::vector<double>& y, double h) {
    std::vector<double> out(y.size(), 0.0);
    for (std::size_t i = 1; i < y.size(); ++i) out[i] = out[i - 1] + 0.5 * h * (y[i - 1] + y[i]);
    return out;
}

double interp(const std::vector<double>& t, const std::vector<double>& y, double time) {
    if (time <= t.front()) return y.front();
    if (time >= t.back()) return y.back();
    const double h = t[1] - t[0];
    const auto i = std::min(static_cast<std::size_t>((time - t.front()) / h), t.size() - 2);
    const double w = (time - t[i]) / h;
    return (1.0 - w) * y[i] + w * y[i + 1];
}

} // namespace

RiccatiPath solve_riccati(const LQParams& p) {
    return solve_riccati(p, [&p](double t) { return a_coeff(t, p); });
}

RiccatiPath solve_riccati(const LQParams& p, const std::function<double(double)>& a) {
    p.validate();
    const std::size_t n = p.ode_steps;
    const double h = p.T / static_cast<double>(n);
    RiccatiPath out;
    out.t.reserve(n + 1);
    out.v.reserve(n + 1);
    out.t.push_back(0.0);
    out.v.push_back(p.v0);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = h * static_cast<double>(i);
        const double v = out.v.back();
        const double next = rk4_step(p, a, t, v, h);
        if (blown(next)) {
            double lo = 0.0, hi = h;
            while (hi - lo > 1e-6) {
                const double mid = 0.5 * (lo + hi);
                (blown(rk4_step(p, a, t, v, mid)) ? hi : lo) = mid;
            }
            out.blowup_time = t + hi;
            return out;
        }
        out.t.push_back(i + 1 == n ? p.T : h * static_cast<double>(i + 1));
        out.v.push_back(next);
    }
    return out;
}

double LQEquilibrium::a_at(double time) const { return a_coeff(time, params); }
double LQEquilibrium::b_at(double time) const { return interp(t, b, time); }
double LQEquilibrium::v_at(double time) const { return interp(t, v, time); }
double LQEquilibrium::rho_at(double time) const { return interp(t, rho, time); }

std::vector<double> LQEquilibrium::mass() const {
    std::vector<double> integrand(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) integrand[i] = params.lambda * (v[i] + rho[i] * rho[i]);
    auto out = cumulative(integrand, t[1] - t[0]);
    for (double& m : out) m = std::exp(m);
    return out;
}

LQEquilibrium solve_equilibrium(const LQParams& p) {
    auto ric = solve_riccati(p);
    if (ric.blowup_time)
        throw EquilibriumUndefinedError(
            fmt::format("variance ODE blows up at t = {:.6f} before T = {}", *ric.blowup_time, p.T),
            *ric.blowup_time);

    const std::size_t n = ric.t.size();
    const double h = p.T / static_cast<double>(p.ode_steps);
    LQEquilibrium eq;
    eq.params = p;
    eq.t = std::move(ric.t);
    eq.v = std::move(ric.v);
    eq.a.resize(n);
    for (std::size_t i = 0; i < n; ++i) eq.a[i] = a_coeff(eq.t[i], p);

    std::vector<double> f1(n), f2(n), fa(n);
    for (std::size_t i = 0; i < n; ++i) {
        f1[i] = 2.0 * p.lambda * eq.v[i] - 2.0 * eq.a[i] - p.gamma;
        f2[i] = 2.0 * p.lambda * eq.v[i] - eq.a[i];
        fa[i] = eq.a[i] + p.gamma;
    }
    const auto i1 = cumulative(f1, h);
    const auto i2 = cumulative(f2, h);
    const auto ia = cumulative(fa, h);

    std::vector<double> kernel(n);
    for (std::size_t i = 0; i < n; ++i) kernel[i] = std::exp(i1.back() - i1[i]);
    eq.theta = cumulative(kernel, h).back();
    eq.theta_hat = std::exp(i2.back());

    const double denom = 1.0 - p.delta * eq.theta;
    if (std::abs(denom) < 1e-8)
        throw SingularityError(fmt::format("1 - delta*theta = {:.3e} vanishes", denom), eq.theta);
    eq.rho_T = (p.rho0 * eq.theta_hat + p.x0 * eq.theta) / denom;

    eq.b.resize(n);
    for (std::size_t i = 0; i < n; ++i) eq.b[i] = -(p.x0 + p.delta * eq.rho_T) * std::exp(-(ia.back() - ia[i]));

    std::vector<double> weighted(n);
    for (std::size_t i = 0; i < n; ++i) weighted[i] = std::exp(-i2[i]) * eq.b[i];
    const auto forced = cumulative(weighted, h);
    eq.rho.resize(n);
    for (std::size_t i = 0; i < n; ++i) eq.rho[i] = std::exp(i2[i]) * (p.rho0 - forced[i]);
    return eq;
}

const char* to_string(ScanStatus s) {
    switch (s) {
    case ScanStatus::ok: return "ok";
    case ScanStatus::singular: return "singular";
    case ScanStatus::blowup: return "blowup";
    }
    return "?";
}

ScanReport singularity_scan(const LQParams& p, const std::vector<double>& lambdas, std::size_t threads) {
    if (!std::is_sorted(lambdas.begin(), lambdas.end())) throw ConfigError("lambda grid must be ascending");
    const double nan = std::numeric_limits<double>::quiet_NaN();
    ScanReport report;
    report.rows.resize(lambdas.size());
    parallel_chunks(lambdas.size(), threads, [&](std::size_t begin, std::size_t end, std::size_t) {
        for (std::size_t i = begin; i < end; ++i) {
            LQParams q = p;
            q.lambda = lambdas[i];
            ScanRow& row = report.rows[i];
            row.lambda = lambdas[i];
            try {
                const auto eq = solve_equilibrium(q);
                row.delta_theta = q.delta * eq.theta;
                row.theta_hat = eq.theta_hat;
                row.rho_T = eq.rho_T;
            } catch (const SingularityError& e) {
                row.status = ScanStatus::singular;
                row.delta_theta = q.delta * e.theta();
                row.theta_hat = nan;
                row.rho_T = nan;
            } catch (const EquilibriumUndefinedError& e) {
                row.status = ScanStatus::blowup;
                row.blowup_time = e.blowup_time();
                row.delta_theta = row.theta_hat = row.rho_T = nan;
            }
        }
    });
    for (std::size_t i = 0; i + 1 < report.rows.size() && !report.crossing; ++i) {
        const double lo = report.rows[i].delta_theta - 1.0;
        const double hi = report.rows[i + 1].delta_theta - 1.0;
        if (std::isfinite(lo) && std::isfinite(hi) && lo * hi <= 0.0 && (lo != 0.0 || hi != 0.0))
            report.crossing = {{report.rows[i].lambda, report.rows[i + 1].lambda}};
    }
    for (const auto& row : report.rows)
        if (row.status == ScanStatus::blowup) {
            report.first_blowup_lambda = row.lambda;
            break;
        }
    return report;
}

void write_equilibrium_csv(const std::string& path, const LQEquilibrium& eq) {
    csv::Writer w(path);
    w.header({"t", "a", "b", "v", "rho", "mass"});
    const auto m = eq.mass();
    for (std::size_t i = 0; i < eq.t.size(); ++i) w.row({eq.t[i], eq.a[i], eq.b[i], eq.v[i], eq.rho[i], m[i]});
}

void write_scan_csv(const std::string& path, const ScanReport& report) {
    csv::Writer w(path);
    w.header({"lambda", "delta_theta", "theta_hat", "rho_T", "status", "blowup_time"});
    for (const auto& r : report.rows)
        w.cells({csv::number(r.lambda), csv::number(r.delta_theta), csv::number(r.theta_hat),
                 csv::number(r.rho_T), to_string(r.status),
                 r.blowup_time ? csv::number(*r.blowup_time) : std::string("nan")});
}

void write_figure_script(const std::string& path, const std::vector<FigurePanel>& panels,
                         const std::string& image_name) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "# gnuplot script; run `gnuplot " << path.substr(path.find_last_of('/') + 1) << "`\n"
        << "set terminal pngcairo size 1200,900\n"
        << "set output '" << image_name << "'\n"
        << "set datafile separator ','\n"
        << "set key autotitle columnhead\n"
        << "set multiplot layout 2,2\n"
        << "set xlabel 't'\n";
    auto plot = [&](bool post, int column, const char* title) {
        out << "set title '" << title << "'\n";
        std::string cmd;
        for (const auto& p : panels) {
            if (p.post_singularity != post) continue;
            cmd += cmd.empty() ? "plot " : ", \\\n     ";
            cmd += fmt::format("'{}' using 1:{} with lines title 'lambda = {}'", p.data_file, column, p.lambda);
        }
        out << (cmd.empty() ? "plot NaN notitle" : cmd) << "\n";
    };
    plot(false, 2, "mean rho(t), before the singularity");
    plot(false, 3, "variance v(t), before the singularity");
    plot(true, 2, "mean rho(t), after the singularity");
    plot(true, 3, "variance v(t), after the singularity");
    out << "unset multiplot\n";
}

} // namespace bmfg
