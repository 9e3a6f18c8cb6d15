#include "bmfg/hjb.hpp"

#include "bmfg/errors.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include <fmt/format.h>

namespace bmfg {

void SpaceTimeGrid::validate() const {
    if (!(T > 0.0) || !std::isfinite(T)) throw ConfigError("T must be positive");
    if (!(x_hi > x_lo)) throw ConfigError("x_hi must exceed x_lo");
    if (cells < 4) throw ConfigError("need at least 4 space cells");
    if (time_steps < 1) throw ConfigError("need at least one time step");
}

std::vector<EnvState> env_schedule(const MeasurePath& env, const UniformAxis& t_axis) {
    std::vector<EnvState> out(t_axis.count);
    if (env.size() == 0) return out;
    const double horizon = t_axis.back();
    if (env.times.front() > 1e-12 || env.times.back() < horizon - 1e-9)
        throw ConfigError("environment path does not cover [0, T]");
    std::size_t cached = env.size();
    EnvState state;
    for (std::size_t k = 0; k < t_axis.count; ++k) {
        const bool last = k + 1 == t_axis.count;
        const std::size_t idx = last ? env.size() - 1 : env.index_at(t_axis.at(k) + 0.5 * t_axis.step);
        if (idx != cached) {
            state = summarize(env.measures[idx]);
            cached = idx;
        }
        out[k] = state;
    }
    return out;
}

HJBSolution solve_hjb(const HJBProblem& problem) {
    const auto& grid = problem.grid;
    grid.validate();
    if (!problem.f || !problem.g || !problem.gamma) throw ConfigError("HJB problem has an unset coefficient");
    const UniformAxis t_axis = grid.t_axis();
    const UniformAxis x_axis = grid.x_knots();
    const std::size_t nt = t_axis.count;
    const std::size_t nx = x_axis.count;
    const double dt = grid.dt();
    const double dx = grid.dx();
    const auto env = env_schedule(problem.env, t_axis);

    std::vector<double> gamma(nx), terminal(nx);
    double g_norm = 0.0, gamma_max = 0.0;
    for (std::size_t i = 0; i < nx; ++i) {
        const double x = x_axis.at(i);
        gamma[i] = problem.gamma(x);
        terminal[i] = problem.g(x, env.back());
        if (!(gamma[i] >= 0.0) || !std::isfinite(gamma[i]))
            throw ConfigError(fmt::format("death rate {} at x = {} is not a finite non-negative number", gamma[i], x));
        if (!std::isfinite(terminal[i])) throw ConfigError(fmt::format("terminal cost is not finite at x = {}", x));
        g_norm = std::max(g_norm, std::abs(terminal[i]));
        gamma_max = std::max(gamma_max, gamma[i]);
    }
    // f on every (step, knot); step k covers (t_k, t_{k+1}].
    std::vector<double> f((nt - 1) * nx);
    double f_norm = 0.0;
    for (std::size_t k = 0; k + 1 < nt; ++k)
        for (std::size_t i = 0; i < nx; ++i) {
            const double v = problem.f(t_axis.at(k), x_axis.at(i), env[k]);
            if (!std::isfinite(v)) throw ConfigError(fmt::format("running cost is not finite at x = {}", x_axis.at(i)));
            f[k * nx + i] = v;
            f_norm = std::max(f_norm, std::abs(v));
        }

    const double log_floor = -0.5 * g_norm - 0.5 * f_norm * grid.T - 1.0;
    const double max_log_w = -log_floor;
    const double cfl = dt * (0.5 * f_norm + gamma_max * max_log_w);
    if (cfl > 0.5)
        throw ConfigError(fmt::format("HJB reaction step not admissible: dt * (|f|/2 + gamma_max * max|log w|) = {:.4g} > 0.5; "
                                      "use more time steps",
                                      cfl));
    const double w_floor = std::exp(log_floor);

    HJBSolution sol{GridFunction(t_axis, x_axis), GridFunction(t_axis, x_axis), 0, {}};
    std::vector<double> w(nx), lower(nx), diag(nx), upper(nx), scratch;
    for (std::size_t i = 0; i < nx; ++i) w[i] = std::exp(-0.5 * terminal[i]);

    auto store = [&](std::size_t k) {
        auto u = sol.u.row(k);
        for (std::size_t i = 0; i < nx; ++i) u[i] = -2.0 * std::log(w[i]);
        auto du = sol.du.row(k);
        for (std::size_t i = 1; i + 1 < nx; ++i) du[i] = (u[i + 1] - u[i - 1]) / (2.0 * dx);
        du[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * dx);
        du[nx - 1] = (3.0 * u[nx - 1] - 4.0 * u[nx - 2] + u[nx - 3]) / (2.0 * dx);
    };
    store(nt - 1);

    const double r = dt / (dx * dx);
    for (std::size_t i = 0; i < nx; ++i) {
        lower[i] = -r;
        upper[i] = -r;
        diag[i] = 1.0 + 2.0 * r;
    }
    upper[0] = -2.0 * r;  // Neumann through the ghost knot w_{-1} = w_1
    lower[nx - 1] = -2.0 * r;

    std::vector<double> decay(nx);
    for (std::size_t i = 0; i < nx; ++i) decay[i] = std::exp(-gamma[i] * dt);

    for (std::size_t k = nt - 1; k-- > 0;) {
        // Reaction over the step, exact for coefficients frozen at t_k: y = log w
        // solves dy/dtau = -f/2 - gamma y backward in time.
        const double* fk = &f[k * nx];
        for (std::size_t i = 0; i < nx; ++i) {
            const double y = std::log(w[i]);
            double y_new;
            if (gamma[i] > 0.0)
                y_new = y * decay[i] - fk[i] / (2.0 * gamma[i]) * (1.0 - decay[i]);
            else
                y_new = y - 0.5 * fk[i] * dt;
            w[i] = std::exp(y_new);
        }
        solve_tridiagonal(lower, diag, upper, w, scratch);
        for (std::size_t i = 0; i < nx; ++i) {
            if (!std::isfinite(w[i]))
                throw NumericalError(fmt::format("w is not finite at t = {}, x = {}", t_axis.at(k), x_axis.at(i)));
            if (w[i] < w_floor) {
                w[i] = w_floor;
                if (i > 0 && i + 1 < nx) ++sol.clamped;
            }
        }
        store(k);
    }

    const double interior = static_cast<double>((nt - 1) * (nx - 2));
    if (static_cast<double>(sol.clamped) > 1e-3 * interior)
        sol.warnings.push_back(fmt::format("w was clamped at {} interior knots ({:.3g}% of the grid)", sol.clamped,
                                           100.0 * static_cast<double>(sol.clamped) / interior));
    return sol;
}

double hjb_residual(const HJBProblem& problem, const HJBSolution& solution) {
    const auto& u = solution.u;
    const auto& t_axis = u.t_axis();
    const auto& x_axis = u.x_axis();
    const auto env = env_schedule(problem.env, t_axis);
    const double dt = t_axis.step, dx = x_axis.step;
    double worst = 0.0;
    for (std::size_t k = 0; k + 1 < t_axis.count; ++k)
        for (std::size_t i = 1; i + 1 < x_axis.count; ++i) {
            const double x = x_axis.at(i);
            const double ut = (u(k + 1, i) - u(k, i)) / dt;
            const double uxx = (u(k, i + 1) - 2.0 * u(k, i) + u(k, i - 1)) / (dx * dx);
            const double ux = (u(k, i + 1) - u(k, i - 1)) / (2.0 * dx);
            const double res = ut + uxx - 0.5 * ux * ux - problem.gamma(x) * u(k, i) + problem.f(t_axis.at(k), x, env[k]);
            worst = std::max(worst, std::abs(res));
        }
    return worst;
}

ControlPolicy feedback_policy(const GridFunction& du) {
    auto shared = std::make_shared<const GridFunction>(du);
    return [shared](double t, double x) { return -shared->interpolate(t, x); };
}

} // namespace bmfg
