#include "bmfg/app.hpp"

#include "bmfg/csv.hpp"
#include "bmfg/errors.hpp"
#include "bmfg/models.hpp"
#include "bmfg/nash.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace bmfg {

const char* version() { return "1.0.0"; }

namespace {

namespace fs = std::filesystem;
using config::ExperimentConfig;

struct Context {
    const ExperimentConfig& cfg;
    fs::path dir;
    std::ostream& out;
    std::ostream& err;
    RunResult result;

    std::string file(const std::string& name) {
        result.files.push_back(name);
        return (dir / name).string();
    }
    std::size_t threads() const { return static_cast<std::size_t>(cfg.integer("", "threads")); }
    std::uint64_t seed() const { return static_cast<std::uint64_t>(cfg.integer("", "seed")); }
    void warn(const std::vector<std::string>& warnings, std::string_view who) {
        for (const auto& w : warnings) fmt::print(err, "warning: {}: {}\n", who, w);
    }
};

void write_mass_csv(const std::string& path, const GridFunction& m) {
    csv::Writer w(path);
    w.header({"t", "mass"});
    const auto mass = mass_path(m);
    for (std::size_t k = 0; k < mass.size(); ++k) w.row({m.t_axis().at(k), mass[k]});
}

GridFunction decimate(const GridFunction& g, std::size_t every) {
    if (every <= 1) return g;
    const auto& t = g.t_axis();
    const std::size_t rows = (t.count - 1) / every + 1;
    GridFunction out(UniformAxis{t.start, t.step * static_cast<double>(every), rows}, g.x_axis());
    for (std::size_t r = 0; r < rows; ++r) {
        const auto src = g.row(r * every);
        std::copy(src.begin(), src.end(), out.row(r).begin());
    }
    return out;
}

void cmd_lq(Context& c) {
    const auto p = lq_params(c.cfg);
    const auto eq = solve_equilibrium(p);
    write_equilibrium_csv(c.file("lq_equilibrium.csv"), eq);
    fmt::print(c.out, "theta = {:.12g}\ntheta_hat = {:.12g}\ndelta_theta = {:.12g}\nrho_T = {:.12g}\nv_T = {:.12g}\n",
               eq.theta, eq.theta_hat, p.delta * eq.theta, eq.rho_T, eq.v.back());
}

void cmd_scan(Context& c) {
    const auto p = lq_params(c.cfg);
    const double lo = c.cfg.number("scan", "lambda_min");
    const double hi = c.cfg.number("scan", "lambda_max");
    const double step = c.cfg.number("scan", "lambda_step");
    std::vector<double> lambdas;
    const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
    for (std::size_t i = 0; i <= count; ++i) lambdas.push_back(std::round((lo + step * static_cast<double>(i)) * 1e12) / 1e12);
    const auto report = singularity_scan(p, lambdas, c.threads());
    write_scan_csv(c.file("scan.csv"), report);
    if (report.crossing)
        fmt::print(c.out, "delta_theta crosses 1 between lambda = {} and {}\n", report.crossing->first,
                   report.crossing->second);
    else
        fmt::print(c.out, "delta_theta does not cross 1 on the grid\n");
    if (report.first_blowup_lambda)
        fmt::print(c.out, "first blow-up before T at lambda = {}\n", *report.first_blowup_lambda);
    else
        fmt::print(c.out, "no blow-up before T on the grid\n");

    std::vector<FigurePanel> panels;
    const auto& figure = c.cfg.list("scan", "figure_lambdas");
    for (std::size_t i = 0; i < figure.size(); ++i) {
        LQParams q = p;
        q.lambda = figure[i];
        try {
            const auto eq = solve_equilibrium(q);
            const std::string name = fmt::format("figure_lambda_{}.csv", i);
            csv::Writer w(c.file(name));
            w.comment(fmt::format("lambda = {}", q.lambda));
            w.header({"t", "rho", "v"});
            for (std::size_t k = 0; k < eq.t.size(); ++k) w.row({eq.t[k], eq.rho[k], eq.v[k]});
            panels.push_back({q.lambda, name, q.delta * eq.theta > 1.0});
        } catch (const std::exception& e) {
            fmt::print(c.err, "warning: figure lambda {} skipped: {}\n", q.lambda, e.what());
        }
    }
    write_figure_script(c.file("figure.gp"), panels, "figure.png");
}

HJBProblem hjb_problem(const ExperimentConfig& cfg) {
    const auto model = mfg_model(cfg);
    HJBProblem h;
    h.f = model.f;
    h.g = model.g;
    h.gamma = model.gamma;
    h.env = fixed_env(cfg);
    h.grid = grid_from(cfg);
    return h;
}

void cmd_hjb(Context& c) {
    const auto h = hjb_problem(c.cfg);
    const auto sol = solve_hjb(h);
    c.warn(sol.warnings, "hjb");
    const auto every = static_cast<std::size_t>(c.cfg.integer("grid", "record_every"));
    write_grid_csv(c.file("u.csv"), decimate(sol.u, every));
    write_grid_csv(c.file("du.csv"), decimate(sol.du, every));
    write_grid_matrix(c.file("u.matrix"), decimate(sol.u, every));
    fmt::print(c.out, "max|u| = {:.12g}\nmax|Du| = {:.12g}\nresidual = {:.6g}\n", sol.u.max_abs(), sol.du.max_abs(),
               hjb_residual(h, sol));
}

void cmd_fp(Context& c) {
    const auto model = mfg_model(c.cfg);
    auto drift = branching_model(c.cfg).drift;
    const auto policy = configured_policy(c.cfg);
    const auto env = summarize(fixed_env(c.cfg).measures.front());
    FPProblem fp;
    fp.drift = [drift, policy, env](double t, double x) { return drift(t, x, env, policy(t, x)); };
    fp.kappa = [model](double x) { return model.kappa(x); };
    fp.initial_density = model.initial_density;
    fp.grid = grid_from(c.cfg);
    fp.substeps = static_cast<std::size_t>(c.cfg.integer("grid", "fp_substeps"));
    fp.record_every = static_cast<std::size_t>(c.cfg.integer("grid", "record_every"));
    const auto sol = solve_fp(fp);
    c.warn(sol.warnings, "fp");
    write_grid_csv(c.file("m.csv"), sol.m);
    write_grid_matrix(c.file("m.matrix"), sol.m);
    write_mass_csv(c.file("mass.csv"), sol.m);
    const auto last = row_moments(sol.m, sol.m.t_axis().count - 1);
    fmt::print(c.out, "mass(T) = {:.12g}\nmean(T) = {:.12g}\nvariance(T) = {:.12g}\n", last.mass, last.mean,
               last.variance);
}

MFGSolution solve_configured_mfg(Context& c) {
    const auto mc = mfg_config(c.cfg);
    auto sol = solve_mfg(mc);
    c.warn(sol.warnings, "mfg");
    return sol;
}

void cmd_mfg(Context& c) {
    const auto sol = solve_configured_mfg(c);
    const auto every = static_cast<std::size_t>(c.cfg.integer("grid", "record_every"));
    write_gap_csv(c.file("gaps.csv"), sol);
    write_grid_csv(c.file("u.csv"), decimate(sol.u, every));
    write_grid_csv(c.file("m.csv"), decimate(sol.m, every));
    write_mass_csv(c.file("mass.csv"), sol.m);
    fmt::print(c.out, "converged = {}\niterations = {}\nfinal_gap = {:.6g}\n", sol.converged, sol.iterations,
               sol.gap_history.back());
    if (!sol.converged) c.result.exit_code = kExitUnconverged;
}

void cmd_simulate(Context& c) {
    const auto model = branching_model(c.cfg);
    const auto policy = configured_policy(c.cfg);
    const auto env = fixed_env(c.cfg);
    const auto n0 = static_cast<std::size_t>(c.cfg.integer("simulate", "n0"));
    const double dt = c.cfg.number("simulate", "dt");
    const auto replicas = static_cast<std::size_t>(c.cfg.integer("simulate", "replicas"));
    MeanMeasureOptions opt;
    opt.max_population = static_cast<std::size_t>(c.cfg.integer("simulate", "max_population"));
    opt.record_every = static_cast<std::size_t>(c.cfg.integer("simulate", "record_every"));
    opt.threads = c.threads();
    opt.batches = static_cast<std::size_t>(c.cfg.integer("simulate", "batches"));

    if (replicas == 1) {
        const auto traj = simulate(model, env, policy, n0, dt, c.seed(), opt);
        write_events_csv(c.file("events.csv"), traj);
        csv::Writer w(c.file("population.csv"));
        w.header({"t", "label", "position", "birth_time"});
        for (const auto& s : traj.snapshots)
            for (const auto& p : s.particles)
                w.cells({csv::number(s.time), p.label.to_string(), csv::number(p.position), csv::number(p.birth_time)});
        csv::Writer pc(c.file("particles.csv"));
        pc.header({"label", "birth_time", "end_time", "survived", "final_position", "cost"});
        for (const auto& p : traj.particles)
            pc.cells({p.label.to_string(), csv::number(p.birth_time), csv::number(p.end_time),
                      p.survived ? "1" : "0", csv::number(p.final_position),
                      csv::number(path_cost(model, env, traj, p.label))});
        fmt::print(c.out, "N_T = {}\nevents = {}\n", traj.snapshots.back().particles.size(), traj.events.size());
        return;
    }
    const auto est = mean_measure(model, env, policy, n0, dt, replicas, c.seed(), opt);
    write_path_csv(c.file("mean_measure.csv"), est.path);
    csv::Writer w(c.file("mass.csv"));
    w.header({"t", "mass", "mass_se"});
    for (std::size_t k = 0; k < est.path.size(); ++k) w.row({est.path.times[k], mass(est.path.measures[k]), est.mass_se[k]});
    fmt::print(c.out, "mass(T) = {:.12g} +- {:.3g}\n", mass(est.path.measures.back()), est.mass_se.back());
}

void cmd_nash(Context& c) {
    const auto sol = solve_configured_mfg(c);
    if (!sol.converged) c.result.exit_code = kExitUnconverged;
    NashExperiment exp;
    exp.model = branching_model(c.cfg);
    exp.equilibrium = feedback_policy(sol.du);
    exp.deviations = standard_deviations(exp.equilibrium);
    for (double n : c.cfg.list("nash", "n_values")) exp.n_values.push_back(static_cast<std::size_t>(n));
    exp.replicas = static_cast<std::size_t>(c.cfg.integer("nash", "replicas"));
    exp.dt = c.cfg.number("nash", "dt");
    exp.seed = c.seed();
    exp.threads = c.threads();
    exp.common_random_numbers = c.cfg.flag("nash", "common_random_numbers");
    exp.full_check_replicas = static_cast<std::size_t>(c.cfg.integer("nash", "full_check_replicas"));
    exp.checkpoints.clear();
    for (double s : {0.25, 0.5, 0.75, 1.0}) exp.checkpoints.push_back(s * exp.model.horizon);
    const auto report = run_nash(exp);
    write_nash_csv(c.file("nash.csv"), report);
    for (const auto& e : report.epsilon)
        fmt::print(c.out, "n = {}: epsilon_hat = {:.6g} +- {:.3g} ({})\n", e.n, e.epsilon, e.se, e.argmax);
    for (const auto& g : report.gains)
        if (g.noisy) fmt::print(c.err, "warning: n = {}, {}: standard error exceeds the gain estimate\n", g.n, g.deviation);
    fmt::print(c.out, "leave-one-out checks = {}, violations = {}, worst ratio = {:.12g}\n",
               report.leave_one_out_checks, report.leave_one_out_violations, report.leave_one_out_worst_ratio);
    if (report.leave_one_out_violations) c.result.exit_code = kExitNumerical;
}

void cmd_w1(Context& c) {
    const auto& a = c.cfg.text("w1", "a");
    const auto& b = c.cfg.text("w1", "b");
    if (a.empty() || b.empty()) throw ConfigError("[w1] a and b must name measure CSV files");
    const double x0 = c.cfg.number("w1", "base_point");
    for (const auto& path : {a, b})
        if (!fs::exists(path)) throw ConfigError("no such file: " + path);
    const double d = w1(read_measure_csv(a, x0), read_measure_csv(b, x0));
    std::string text = fmt::format("{}", d);
    if (text.find_first_of(".eEni") == std::string::npos) text += ".0";
    fmt::print(c.out, "{}\n", text);
}

void write_manifest(Context& c) {
    std::ofstream m(c.dir / "manifest.txt", std::ios::binary);
    if (!m) throw IoError("cannot write manifest.txt");
    fmt::print(m, "# bmfg run manifest\nversion = {}\n", version());
    for (const auto& [k, v] : c.cfg.resolved()) fmt::print(m, "{} = {}\n", k, v);
    fmt::print(m, "exit_code = {}\n", c.result.exit_code);
    for (const auto& f : c.result.files) fmt::print(m, "output = {}\n", f);
}

} // namespace

RunResult run_experiment(const ExperimentConfig& cfg, const std::string& out_dir, std::ostream& out, std::ostream& err) {
    static const std::map<std::string, std::function<void(Context&)>> table = {
        {"lq", cmd_lq},   {"scan", cmd_scan},         {"hjb", cmd_hjb},   {"fp", cmd_fp},
        {"mfg", cmd_mfg}, {"simulate", cmd_simulate}, {"nash", cmd_nash}, {"w1", cmd_w1},
    };
    Context c{cfg, fs::path(out_dir.empty() ? "." : out_dir), out, err, {}};
    auto fail = [&](int code, const char* kind, const std::string& what) {
        fmt::print(err, "error: {}: {}\n", kind, what);
        c.result.exit_code = code;
        return c.result;
    };
    try {
        auto it = table.find(cfg.command());
        if (it == table.end())
            throw ConfigError(cfg.command().empty() ? "no command given" : "unknown command '" + cfg.command() + "'");
        std::error_code ec;
        fs::create_directories(c.dir, ec);
        if (ec) return fail(kExitFailure, "io", "cannot create " + c.dir.string() + ": " + ec.message());
        it->second(c);
        if (!c.result.files.empty()) write_manifest(c);
        return c.result;
    } catch (const ConfigError& e) {
        return fail(kExitConfig, "configuration", e.what());
    } catch (const LookupError& e) {
        return fail(kExitConfig, "lookup", e.what());
    } catch (const EquilibriumUndefinedError& e) {
        return fail(kExitNumerical, "equilibrium undefined", e.what());
    } catch (const SingularityError& e) {
        return fail(kExitNumerical, "singular fixed point", e.what());
    } catch (const ExplosionError& e) {
        return fail(kExitNumerical, "population explosion", e.what());
    } catch (const NumericalError& e) {
        return fail(kExitNumerical, "numerical failure", e.what());
    } catch (const IoError& e) {
        return fail(kExitFailure, "io", e.what());
    } catch (const std::exception& e) {
        return fail(kExitFailure, "failure", e.what());
    }
}

} // namespace bmfg
