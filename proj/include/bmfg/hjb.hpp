#pragma once

// Backward HJB solver on a truncated interval:
//   d_t u + u_xx - |u_x|^2 / 2 - gamma(x) u + f(t, x, mu_t) = 0,  u(T) = g(x, mu_T),
// solved for w = exp(-u/2), which satisfies the semilinear heat equation
//   d_t w + w_xx = w (f / 2 + gamma log w)
// with homogeneous Neumann conditions at both ends.

#include "bmfg/branching.hpp"
#include "bmfg/grid.hpp"
#include "bmfg/measures.hpp"

#include <functional>
#include <string>
#include <vector>

namespace bmfg {

struct SpaceTimeGrid {
    double T = 1.0;
    double x_lo = -8.0;
    double x_hi = 8.0;
    std::size_t cells = 320;       // space intervals; knots at x_lo + i * dx
    std::size_t time_steps = 400;

    UniformAxis t_axis() const { return UniformAxis::knots(0.0, T, time_steps); }
    UniformAxis x_knots() const { return UniformAxis::knots(x_lo, x_hi, cells); }
    UniformAxis x_cells() const { return UniformAxis::cell_centers(x_lo, x_hi, cells); }
    double dt() const { return T / static_cast<double>(time_steps); }
    double dx() const { return (x_hi - x_lo) / static_cast<double>(cells); }
    void validate() const;
};

using RunningCost = std::function<double(double t, double x, const EnvState& env)>;
using FinalCost = std::function<double(double x, const EnvState& env)>;
using Rate = std::function<double(double x)>;

struct HJBProblem {
    RunningCost f;
    FinalCost g;
    Rate gamma;
    /// Environment on any time grid covering [0, T]; empty means the zero measure.
    MeasurePath env;
    SpaceTimeGrid grid;
};

struct HJBSolution {
    GridFunction u;
    GridFunction du;
    std::size_t clamped = 0;            // interior knots raised to the lower bound on w
    std::vector<std::string> warnings;
};

/// Throws ConfigError when the reaction step is not CFL-admissible and
/// NumericalError when w becomes non-finite.
HJBSolution solve_hjb(const HJBProblem& problem);

/// Max over interior knots of |d_t u + u_xx - |u_x|^2/2 - gamma u + f| with
/// forward time and centered space differences.
double hjb_residual(const HJBProblem& problem, const HJBSolution& solution);

/// alpha(t, x) = -du(t, x), bilinear, constant outside the grid.
ControlPolicy feedback_policy(const GridFunction& du);

/// Per time knot of `t_axis`, the environment summary the solvers use on
/// (t_k, t_{k+1}]; the last entry is the terminal environment.
std::vector<EnvState> env_schedule(const MeasurePath& env, const UniformAxis& t_axis);

} // namespace bmfg
