#include "bmfg/models.hpp"

#include "bmfg/errors.hpp"

#include <cmath>
#include <memory>
#include <numbers>

#include <fmt/format.h>

namespace bmfg {

using config::ExperimentConfig;
using expr::Var;

namespace {

std::shared_ptr<const expr::Expression> compiled(const ExperimentConfig& cfg, std::string_view key) {
    return std::make_shared<const expr::Expression>(cfg.expression("model", key));
}

void only(const expr::Expression& e, std::string_view key, std::initializer_list<Var> allowed) {
    static constexpr std::string_view names[] = {"t", "x", "mass", "mean", "a"};
    for (std::size_t v = 0; v < expr::kVarCount; ++v) {
        const auto var = static_cast<Var>(v);
        if (e.uses(var) && std::find(allowed.begin(), allowed.end(), var) == allowed.end())
            throw ConfigError(fmt::format("[model] {} may not use the variable '{}'", key, names[v]));
    }
}

// Samples `e` over the space grid and rejects non-finite values.
void check_finite(const expr::Expression& e, std::string_view key, const SpaceTimeGrid& grid) {
    const auto xs = grid.x_knots();
    for (double t : {0.0, grid.T})
        for (std::size_t i = 0; i < xs.count; ++i) {
            const double v = e(t, xs.at(i), 1.0, 0.0, 0.0);
            if (!std::isfinite(v))
                throw ConfigError(fmt::format("[model] {} is not finite at t = {}, x = {}", key, t, xs.at(i)));
        }
}

std::vector<double> offspring_probabilities(const ExperimentConfig& cfg) {
    auto p = cfg.list("model", "offspring");
    const auto cap = static_cast<std::size_t>(cfg.integer("model", "max_offspring"));
    if (p.size() > cap + 1) p.resize(cap + 1);
    double total = 0.0;
    for (double v : p) total += v;
    if (!(total > 0.0)) throw ConfigError("[model] offspring probabilities vanish after truncation");
    for (double& v : p) v /= total;
    return p;
}

double gaussian(double x, double mean, double var) {
    const double d = x - mean;
    return std::exp(-0.5 * d * d / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

} // namespace

LQParams lq_params(const ExperimentConfig& cfg) {
    LQParams p;
    p.T = cfg.number("lq", "T");
    p.gamma = cfg.number("lq", "gamma");
    p.lambda = cfg.number("lq", "lambda");
    p.delta = cfg.number("lq", "delta");
    p.x0 = cfg.number("lq", "x0");
    p.rho0 = cfg.number("lq", "rho0");
    p.v0 = cfg.number("lq", "v0");
    p.ode_steps = static_cast<std::size_t>(cfg.integer("lq", "ode_steps"));
    p.validate();
    return p;
}

SpaceTimeGrid grid_from(const ExperimentConfig& cfg) {
    SpaceTimeGrid g;
    g.T = cfg.number("model", "T");
    g.x_lo = cfg.number("grid", "x_lo");
    g.x_hi = cfg.number("grid", "x_hi");
    g.cells = static_cast<std::size_t>(cfg.integer("grid", "cells"));
    g.time_steps = static_cast<std::size_t>(cfg.integer("grid", "time_steps"));
    g.validate();
    return g;
}

MFGModel mfg_model(const ExperimentConfig& cfg) {
    const auto grid = grid_from(cfg);
    auto f = compiled(cfg, "f");
    auto g = compiled(cfg, "g");
    auto gamma = compiled(cfg, "gamma");
    only(*f, "f", {Var::t, Var::x, Var::mass, Var::mean});
    only(*g, "g", {Var::x, Var::mass, Var::mean});
    only(*gamma, "gamma", {Var::x});
    check_finite(*f, "f", grid);
    check_finite(*g, "g", grid);
    check_finite(*gamma, "gamma", grid);

    MFGModel m;
    m.f = [f](double t, double x, const EnvState& env) { return (*f)(t, x, env.mass, env.mean); };
    m.g = [g](double x, const EnvState& env) { return (*g)(0.0, x, env.mass, env.mean); };
    m.gamma = [gamma](double x) { return (*gamma)(0.0, x); };
    if (cfg.text("model", "mean_offspring").empty()) {
        const auto p = offspring_probabilities(cfg);
        double mean = 0.0;
        for (std::size_t l = 0; l < p.size(); ++l) mean += static_cast<double>(l) * p[l];
        m.mean_offspring = [mean](double) { return mean; };
    } else {
        auto mo = compiled(cfg, "mean_offspring");
        only(*mo, "mean_offspring", {Var::x});
        check_finite(*mo, "mean_offspring", grid);
        m.mean_offspring = [mo](double x) { return (*mo)(0.0, x); };
    }
    const double mean = cfg.number("model", "m0_mean");
    const double var = cfg.number("model", "m0_variance");
    if (!(var > 0.0)) throw ConfigError("[model] m0_variance must be positive for the PDE solvers");
    m.initial_density = [mean, var](double x) { return gaussian(x, mean, var); };
    return m;
}

MFGConfig mfg_config(const ExperimentConfig& cfg) {
    MFGConfig c;
    c.model = mfg_model(cfg);
    c.grid = grid_from(cfg);
    c.fp_substeps = static_cast<std::size_t>(cfg.integer("grid", "fp_substeps"));
    c.damping = cfg.number("mfg", "damping");
    c.max_iterations = static_cast<std::size_t>(cfg.integer("mfg", "max_iterations"));
    c.tolerance = cfg.number("mfg", "tolerance");
    c.validate();
    return c;
}

ModelSpec branching_model(const ExperimentConfig& cfg) {
    ModelSpec m;
    auto drift = compiled(cfg, "drift");
    auto sigma = compiled(cfg, "sigma");
    auto gamma = compiled(cfg, "gamma");
    auto f = compiled(cfg, "f");
    auto g = compiled(cfg, "g");
    only(*g, "g", {Var::x, Var::mass, Var::mean});

    auto coefficient = [](std::shared_ptr<const expr::Expression> e) -> Coefficient {
        if (e->is_constant()) {
            const double c = e->value();
            return [c](double, double, const EnvState&, double) { return c; };
        }
        return [e](double t, double x, const EnvState& env, double a) { return (*e)(t, x, env.mass, env.mean, a); };
    };
    m.drift = coefficient(drift);
    m.diffusion = coefficient(sigma);
    m.death_rate = coefficient(gamma);
    m.death_rate_bound = cfg.number("model", "gamma_max");
    if (m.death_rate_bound == 0.0 && gamma->is_constant()) m.death_rate_bound = gamma->value();
    if (m.death_rate_bound == 0.0 && !gamma->is_constant())
        throw ConfigError("[model] gamma_max is required when gamma is not constant");
    m.offspring = OffspringLaw::constant(cfg.list("model", "offspring"),
                                         static_cast<std::size_t>(cfg.integer("model", "max_offspring")));
    if (f->is_constant() && f->value() == 0.0)
        m.running_cost = [](double, double, const EnvState&, double a) { return 0.5 * a * a; };
    else
        m.running_cost = [f](double t, double x, const EnvState& env, double a) {
            return 0.5 * a * a + (*f)(t, x, env.mass, env.mean, a);
        };
    m.terminal_cost = [g](double x, const EnvState& env) { return (*g)(0.0, x, env.mass, env.mean); };
    m.horizon = cfg.number("model", "T");

    const double mean = cfg.number("model", "m0_mean");
    const double var = cfg.number("model", "m0_variance");
    if (var == 0.0) {
        m.initial_law = FiniteMeasure::dirac(mean);
    } else {
        // Fine piecewise-constant Gaussian on mean +- 8 sd.
        const double sd = std::sqrt(var);
        const auto cells = UniformAxis::cell_centers(mean - 8.0 * sd, mean + 8.0 * sd, 4000);
        std::vector<double> values(cells.count);
        double total = 0.0;
        for (std::size_t i = 0; i < cells.count; ++i) total += (values[i] = gaussian(cells.at(i), mean, var)) * cells.step;
        for (double& v : values) v /= total;
        m.initial_law = FiniteMeasure::density(cells, std::move(values));
    }
    return m;
}

ControlPolicy configured_policy(const ExperimentConfig& cfg) {
    auto p = compiled(cfg, "policy");
    only(*p, "policy", {Var::t, Var::x});
    if (p->is_constant()) {
        const double c = p->value();
        return [c](double, double) { return c; };
    }
    return [p](double t, double x) { return (*p)(t, x); };
}

MeasurePath fixed_env(const ExperimentConfig& cfg) {
    return constant_path({0.0, cfg.number("model", "T")},
                         FiniteMeasure::dirac(cfg.number("env", "mean"), cfg.number("env", "mass")));
}

ExperimentConfig preset_config(std::string_view name, std::string_view extra) {
    auto parsed = config::parse_config(fmt::format("[model]\npreset = {}\n{}", name, extra));
    if (!parsed.ok()) {
        std::string msg;
        for (const auto& d : parsed.errors) msg += (msg.empty() ? "" : "; ") + d.to_string();
        throw ConfigError(msg);
    }
    return parsed.config;
}

} // namespace bmfg
