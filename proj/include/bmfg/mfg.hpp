#pragma once

// Damped Picard iteration for the coupled HJB / Fokker-Planck system:
// environment -> HJB -> feedback drift -Du -> FP -> new environment.

#include "bmfg/fokker_planck.hpp"
#include "bmfg/hjb.hpp"

#include <optional>
#include <string>
#include <vector>

namespace bmfg {

struct MFGModel {
    RunningCost f;
    FinalCost g;
    Rate gamma;
    /// sum over l of l p_l(x).
    Rate mean_offspring;
    std::function<double(double x)> initial_density;

    /// gamma(x) (sum l p_l(x) - 1).
    double kappa(double x) const { return gamma(x) * (mean_offspring(x) - 1.0); }
};

struct MFGConfig {
    MFGModel model;
    SpaceTimeGrid grid;
    std::size_t fp_substeps = 1;
    double damping = 0.5;
    std::size_t max_iterations = 50;
    double tolerance = 1e-3;

    void validate() const;
};

struct PsiResult {
    HJBSolution hjb;
    FPSolution fp;
    MeasurePath path;
};

/// One application of the best-response map.
PsiResult psi_detailed(const MeasurePath& env, const MFGConfig& config);
MeasurePath psi(const MeasurePath& env, const MFGConfig& config);

struct MFGSolution {
    GridFunction u;
    GridFunction du;
    GridFunction m;
    MeasurePath env;                  // the environment m was computed from
    std::size_t iterations = 0;       // environment updates performed
    std::vector<double> gap_history;  // sup-in-time w1(env, psi(env)), one per psi evaluation
    bool converged = false;
    std::vector<std::string> warnings;
};

/// m0 carried by pure diffusion with the model's source term (no drift).
MeasurePath default_initial_env(const MFGConfig& config);

/// The first update replaces the initial guess by psi(guess); later updates
/// use env <- (1 - damping) env + damping psi(env). Non-convergence is
/// reported through `converged`, not thrown.
MFGSolution solve_mfg(const MFGConfig& config, const std::optional<MeasurePath>& initial_env = std::nullopt);

/// iteration,gap
void write_gap_csv(const std::string& path, const MFGSolution& solution);

} // namespace bmfg
