#include "bmfg/fokker_planck.hpp"

#include "bmfg/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace bmfg {

double fp_max_dt(double dx, double max_abs_drift) {
    return max_abs_drift > 0.0 ? 0.5 * dx / max_abs_drift : std::numeric_limits<double>::infinity();
}

FPSolution solve_fp(const FPProblem& problem) {
    const auto& grid = problem.grid;
    grid.validate();
    if (!problem.drift || !problem.kappa || !problem.initial_density)
        throw ConfigError("FP problem has an unset coefficient");
    if (problem.substeps == 0 || problem.record_every == 0)
        throw ConfigError("substeps and record_every must be positive");

    const UniformAxis t_axis = grid.t_axis();
    const UniformAxis cells = grid.x_cells();
    const UniformAxis faces = grid.x_knots();
    const std::size_t nc = cells.count;
    const double dx = grid.dx();
    const double dt = grid.dt() / static_cast<double>(problem.substeps);
    const std::size_t steps = grid.time_steps * problem.substeps;

    std::vector<double> kappa(nc), m(nc);
    for (std::size_t i = 0; i < nc; ++i) {
        kappa[i] = problem.kappa(cells.at(i));
        if (!std::isfinite(kappa[i])) throw ConfigError(fmt::format("kappa is not finite at x = {}", cells.at(i)));
        m[i] = problem.initial_density(cells.at(i));
        if (!(m[i] >= 0.0) || !std::isfinite(m[i]))
            throw ConfigError(fmt::format("initial density must be finite and non-negative (x = {})", cells.at(i)));
    }
    double total = 0.0;
    for (double v : m) total += v * dx;
    if (!(total > 0.0)) throw ConfigError("initial density has zero mass on the grid");
    for (double& v : m) v /= total;

    // The step limit needs max|b| over the whole run before stepping starts;
    // the drift is evaluated again while stepping rather than stored.
    double drift_max = 0.0;
    for (std::size_t s = 0; s < steps; ++s)
        for (std::size_t j = 0; j < faces.count; ++j) {
            const double b = problem.drift(dt * static_cast<double>(s), faces.at(j));
            if (!std::isfinite(b)) throw ConfigError(fmt::format("drift is not finite at x = {}", faces.at(j)));
            drift_max = std::max(drift_max, std::abs(b));
        }
    const double dt_max = fp_max_dt(dx, drift_max);
    if (dt > dt_max * (1.0 + 1e-12))
        throw ConfigError(fmt::format("FP step dt = {:.4g} exceeds the positivity limit {:.4g} "
                                      "dx / (2 max|b|); raise fp substeps or time steps",
                                      dt, dt_max));

    std::vector<std::size_t> kept;
    for (std::size_t k = 0; k < t_axis.count; ++k)
        if (k % problem.record_every == 0 || k + 1 == t_axis.count) kept.push_back(k);
    const UniformAxis rec_axis = kept.size() == t_axis.count
                                     ? t_axis
                                     : UniformAxis{0.0, t_axis.step * static_cast<double>(problem.record_every), kept.size()};
    // Decimated axes are only uniform when the last knot falls on the stride.
    if (kept.size() != t_axis.count && (t_axis.count - 1) % problem.record_every != 0)
        throw ConfigError("record_every must divide the number of time steps");

    FPSolution sol{GridFunction(rec_axis, cells), 0.0, {}};
    const std::size_t edge = std::max<std::size_t>(2, nc / 50);
    std::size_t next_row = 0;
    auto record = [&](std::size_t k) {
        if (next_row < kept.size() && kept[next_row] == k) {
            std::copy(m.begin(), m.end(), sol.m.row(next_row).begin());
            ++next_row;
        }
        double all = 0.0, outer = 0.0;
        for (std::size_t i = 0; i < nc; ++i) {
            all += m[i];
            if (i < edge || i + edge >= nc) outer += m[i];
        }
        if (all > 0.0) sol.boundary_mass_fraction = std::max(sol.boundary_mass_fraction, outer / all);
    };
    record(0);

    std::vector<double> growth(nc);
    for (std::size_t i = 0; i < nc; ++i) growth[i] = std::exp(kappa[i] * dt);

    const double r = dt / (dx * dx);
    std::vector<double> lower(nc, -r), diag(nc, 1.0 + 2.0 * r), upper(nc, -r), flux(faces.count), b(faces.count),
        scratch;
    for (std::size_t s = 0; s < steps; ++s) {
        for (std::size_t j = 0; j < faces.count; ++j) b[j] = problem.drift(dt * static_cast<double>(s), faces.at(j));
        // Upwind fluxes; outside the domain the density is zero.
        for (std::size_t j = 0; j < faces.count; ++j) {
            const double left = j > 0 ? m[j - 1] : 0.0;
            const double right = j < nc ? m[j] : 0.0;
            flux[j] = std::max(b[j], 0.0) * left + std::min(b[j], 0.0) * right;
        }
        // source integrated exactly over the step
        for (std::size_t i = 0; i < nc; ++i) m[i] = (m[i] - dt * (flux[i + 1] - flux[i]) / dx) * growth[i];
        solve_tridiagonal(lower, diag, upper, m, scratch);
        for (std::size_t i = 0; i < nc; ++i) {
            if (m[i] < -1e-12 || !std::isfinite(m[i]))
                throw NumericalError(fmt::format("density {} at t = {}, x = {}", m[i], dt * static_cast<double>(s + 1),
                                                 cells.at(i)));
            if (m[i] < 0.0) m[i] = 0.0;
        }
        if ((s + 1) % problem.substeps == 0) record((s + 1) / problem.substeps);
    }
    if (sol.boundary_mass_fraction > 1e-4)
        sol.warnings.push_back(fmt::format("up to {:.3g} of the mass sits next to the domain boundary",
                                           sol.boundary_mass_fraction));
    return sol;
}

std::vector<double> mass_path(const GridFunction& m) {
    std::vector<double> out(m.t_axis().count, 0.0);
    const double dx = m.x_axis().step;
    for (std::size_t k = 0; k < out.size(); ++k)
        for (double v : m.row(k)) out[k] += v * dx;
    return out;
}

MeasurePath to_measure_path(const GridFunction& m, double base_point) {
    MeasurePath path;
    for (std::size_t k = 0; k < m.t_axis().count; ++k) {
        const auto row = m.row(k);
        path.times.push_back(m.t_axis().at(k));
        path.measures.push_back(FiniteMeasure::density(m.x_axis(), {row.begin(), row.end()}, base_point));
    }
    return path;
}

GaussianMoments row_moments(const GridFunction& m, std::size_t row) {
    const auto& x = m.x_axis();
    double s0 = 0.0, s1 = 0.0, s2 = 0.0;
    const auto values = m.row(row);
    for (std::size_t i = 0; i < x.count; ++i) {
        const double w = values[i] * x.step;
        s0 += w;
        s1 += w * x.at(i);
    }
    const double mean = s0 > 0.0 ? s1 / s0 : 0.0;
    for (std::size_t i = 0; i < x.count; ++i) {
        const double d = x.at(i) - mean;
        s2 += values[i] * x.step * d * d;
    }
    return {s0, mean, s0 > 0.0 ? s2 / s0 : 0.0};
}

} // namespace bmfg
