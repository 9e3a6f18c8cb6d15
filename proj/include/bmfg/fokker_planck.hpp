#pragma once

// Forward Fokker-Planck equation with a branching source,
//   d_t m - m_xx + (b m)_x - kappa m = 0,
// on cells of the shared grid (cell faces are the HJB knots), with absorbing
// boundaries. Each step is explicit first-order upwind convection, the
// source factor exp(kappa dt) per cell, then implicit diffusion.

#include "bmfg/grid.hpp"
#include "bmfg/hjb.hpp"
#include "bmfg/measures.hpp"

#include <functional>
#include <string>
#include <vector>

namespace bmfg {

struct FPProblem {
    std::function<double(double t, double x)> drift;
    std::function<double(double x)> kappa;  // gamma * sum (l - 1) p_l
    /// Sampled at cell centers and normalized to mass 1.
    std::function<double(double x)> initial_density;
    SpaceTimeGrid grid;
    /// Solver steps per grid time step.
    std::size_t substeps = 1;
    /// Keep every n-th time knot (the last one is always kept).
    std::size_t record_every = 1;
};

struct FPSolution {
    /// Density at recorded time knots; x axis is the cell centers.
    GridFunction m;
    /// Largest fraction of the total mass found in the outer 2% of the cells.
    double boundary_mass_fraction = 0.0;
    std::vector<std::string> warnings;
};

/// Largest dt for which the explicit convection step keeps m >= 0.
double fp_max_dt(double dx, double max_abs_drift);

/// Throws ConfigError when the step violates fp_max_dt and NumericalError on
/// a density below -1e-12.
FPSolution solve_fp(const FPProblem& problem);

/// Per recorded knot: sum of density * cell width.
std::vector<double> mass_path(const GridFunction& m);

/// Density rows as a measure path (cells as density measures).
MeasurePath to_measure_path(const GridFunction& m, double base_point = 0.0);

struct GaussianMoments {
    double mass = 0.0;
    double mean = 0.0;
    double variance = 0.0;
};
GaussianMoments row_moments(const GridFunction& m, std::size_t row);

} // namespace bmfg
