#include "bmfg/mfg.hpp"

#include "bmfg/csv.hpp"
#include "bmfg/errors.hpp"

#include <cmath>

#include <fmt/format.h>

namespace bmfg {

void MFGConfig::validate() const {
    grid.validate();
    if (!(damping > 0.0 && damping <= 1.0)) throw ConfigError(fmt::format("damping must lie in (0, 1], got {}", damping));
    if (!(tolerance > 0.0)) throw ConfigError(fmt::format("tolerance must be positive, got {}", tolerance));
    if (max_iterations == 0) throw ConfigError("max_iterations must be positive");
    if (!model.f || !model.g || !model.gamma || !model.mean_offspring || !model.initial_density)
        throw ConfigError("MFG model has an unset coefficient");
}

namespace {

FPProblem fp_problem(const MFGConfig& config, std::function<double(double, double)> drift) {
    FPProblem fp;
    fp.drift = std::move(drift);
    fp.kappa = [model = config.model](double x) { return model.kappa(x); };
    fp.initial_density = config.model.initial_density;
    fp.grid = config.grid;
    fp.substeps = config.fp_substeps;
    return fp;
}

} // namespace

PsiResult psi_detailed(const MeasurePath& env, const MFGConfig& config) {
    HJBProblem hjb;
    hjb.f = config.model.f;
    hjb.g = config.model.g;
    hjb.gamma = config.model.gamma;
    hjb.env = env;
    hjb.grid = config.grid;
    PsiResult out;
    out.hjb = solve_hjb(hjb);
    auto policy = feedback_policy(out.hjb.du);
    out.fp = solve_fp(fp_problem(config, [policy](double t, double x) { return policy(t, x); }));
    out.path = to_measure_path(out.fp.m);
    return out;
}

MeasurePath psi(const MeasurePath& env, const MFGConfig& config) { return psi_detailed(env, config).path; }

MeasurePath default_initial_env(const MFGConfig& config) {
    config.validate();
    return to_measure_path(solve_fp(fp_problem(config, [](double, double) { return 0.0; })).m);
}

MFGSolution solve_mfg(const MFGConfig& config, const std::optional<MeasurePath>& initial_env) {
    config.validate();
    MFGSolution sol;
    sol.env = initial_env ? *initial_env : default_initial_env(config);

    auto result = psi_detailed(sol.env, config);
    double gap = w1_sup_over_time(sol.env, result.path);
    sol.gap_history.push_back(gap);
    while (!(gap <= config.tolerance) && sol.iterations < config.max_iterations) {
        sol.env = sol.iterations == 0 ? result.path : mix(sol.env, result.path, config.damping);
        ++sol.iterations;
        result = psi_detailed(sol.env, config);
        gap = w1_sup_over_time(sol.env, result.path);
        if (!std::isfinite(gap)) throw NumericalError("fixed-point gap is not finite");
        sol.gap_history.push_back(gap);
    }
    sol.converged = gap <= config.tolerance;
    sol.u = std::move(result.hjb.u);
    sol.du = std::move(result.hjb.du);
    sol.m = std::move(result.fp.m);
    for (auto& w : result.hjb.warnings) sol.warnings.push_back("hjb: " + w);
    for (auto& w : result.fp.warnings) sol.warnings.push_back("fp: " + w);
    if (!sol.converged)
        sol.warnings.push_back(fmt::format("no convergence after {} iterations; last gap {:.4g} > {:.4g}",
                                           sol.iterations, gap, config.tolerance));
    return sol;
}

void write_gap_csv(const std::string& path, const MFGSolution& solution) {
    csv::Writer w(path);
    w.header({"iteration", "gap"});
    for (std::size_t i = 0; i < solution.gap_history.size(); ++i)
        w.cells({std::to_string(i), csv::number(solution.gap_history[i])});
}

} // namespace bmfg
