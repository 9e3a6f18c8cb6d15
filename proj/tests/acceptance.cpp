// Acceptance run: one PASS/FAIL line per criterion. Pass criterion numbers as
// arguments to run a subset.
#include "bmfg/branching.hpp"
#include "bmfg/fokker_planck.hpp"
#include "bmfg/hjb.hpp"
#include "bmfg/lq.hpp"
#include "bmfg/measures.hpp"
#include "bmfg/mfg.hpp"
#include "bmfg/models.hpp"
#include "bmfg/nash.hpp"
#include "oracles/transport.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

using namespace bmfg;

namespace {

struct Outcome {
    bool ok = true;
    std::string detail;
    void require(bool cond, const std::string& what) {
        if (!cond) ok = false;
        detail += (detail.empty() ? "" : "; ") + what + (cond ? "" : " [violated]");
    }
};

const ControlPolicy zero_policy = [](double, double) { return 0.0; };
const MeasurePath no_env = constant_path({0.0, 1.0}, FiniteMeasure());

// ---------------------------------------------------------------- LQ

Outcome lq_defaults() {
    Outcome o;
    const auto eq = solve_equilibrium(LQParams{});
    bool increasing = true;
    for (std::size_t i = 1; i < eq.rho.size(); ++i) increasing = increasing && eq.rho[i] > eq.rho[i - 1];
    o.require(increasing, "rho strictly increasing");
    o.require(eq.rho_T > 0.0 && eq.rho_T < 5.0, fmt::format("rho_T = {:.4f} in (0, 5)", eq.rho_T));
    o.require(std::isfinite(eq.v.back()), fmt::format("v_T = {:.4f} finite", eq.v.back()));
    return o;
}

std::vector<double> scan_grid() {
    std::vector<double> out;
    for (int i = 40; i <= 60; ++i) out.push_back(i / 100.0);
    return out;
}

Outcome lq_scan() {
    Outcome o;
    const auto report = singularity_scan(LQParams{}, scan_grid());
    o.require(report.crossing.has_value(), "delta*theta crosses 1");
    if (report.crossing) {
        const auto [lo, hi] = *report.crossing;
        o.require(lo > 0.45 && hi < 0.55, fmt::format("crossing in [{:.2f}, {:.2f}] inside (0.45, 0.55)", lo, hi));
    }
    o.require(report.first_blowup_lambda.has_value(), "Riccati blow-up found");
    if (report.first_blowup_lambda) {
        const double l = *report.first_blowup_lambda;
        o.require(l > 0.50 && l < 0.60, fmt::format("first blow-up at lambda = {:.2f} inside (0.50, 0.60)", l));
    }
    return o;
}

Outcome lq_post_singularity() {
    Outcome o;
    LQParams p;
    const double base = solve_equilibrium(p).rho_T;
    p.lambda = 0.35;
    const double faster = solve_equilibrium(p).rho_T;
    o.require(faster > base, fmt::format("rho_T(0.35) = {:.4f} > rho_T(0) = {:.4f}", faster, base));

    const auto report = singularity_scan(LQParams{}, scan_grid());
    bool negative = false;
    double witness = NAN;
    if (report.crossing && report.first_blowup_lambda)
        for (const auto& r : report.rows)
            if (r.lambda >= report.crossing->second && r.lambda < *report.first_blowup_lambda &&
                r.status == ScanStatus::ok && r.rho_T < 0.0) {
                negative = true;
                witness = r.lambda;
                break;
            }
    o.require(negative, fmt::format("rho_T < 0 between crossing and blow-up (lambda = {:.2f})", witness));
    return o;
}

// ---------------------------------------------------------------- PDEs

Outcome hjb_closed_form() {
    Outcome o;
    for (double lambda : {0.0, 0.35}) {
        LQParams p;
        p.lambda = lambda;
        p.ode_steps = 4000;
        const auto eq = solve_equilibrium(p);
        HJBProblem h;
        h.f = [](double, double, const EnvState&) { return 0.0; };
        const double rT = eq.rho_T;
        h.g = [&](double x, const EnvState&) {
            return 0.5 * (x - p.x0) * (x - p.x0) + 0.5 * p.delta * (x - rT) * (x - rT);
        };
        h.gamma = [&](double) { return p.gamma; };
        h.grid = {p.T, -15.0, 25.0, 2000, 2000};
        const auto sol = solve_hjb(h);
        double err = 0.0, scale = 0.0;
        for (std::size_t k = 0; k < sol.du.t_axis().count; ++k)
            for (std::size_t i = 0; i < sol.du.x_axis().count; ++i) {
                const double x = sol.du.x_axis().at(i), t = sol.du.t_axis().at(k);
                if (x < -5.0 || x > 15.0) continue;
                const double exact = eq.a_at(t) * x + eq.b_at(t);
                err = std::max(err, std::abs(sol.du(k, i) - exact));
                scale = std::max(scale, std::abs(exact));
            }
        o.require(err / scale <= 1e-2, fmt::format("lambda {}: relative error {:.2e}", lambda, err / scale));
    }
    return o;
}

Outcome fp_gaussian() {
    Outcome o;
    for (double lambda : {0.0, 0.35}) {
        LQParams p;
        p.lambda = lambda;
        p.ode_steps = 4000;
        const auto eq = solve_equilibrium(p);
        FPProblem fp;
        fp.drift = [&](double t, double x) { return -(eq.a_at(t) * x + eq.b_at(t)); };
        fp.kappa = [lambda](double x) { return lambda * x * x; };
        fp.initial_density = [](double x) { return std::exp(-0.5 * x * x); };
        fp.grid = {p.T, -10.0, 15.0, 5000, 100};
        double bmax = 0.0;
        for (std::size_t j = 0; j < eq.t.size(); ++j)
            for (double x : {-10.0, 15.0}) bmax = std::max(bmax, std::abs(eq.a[j] * x + eq.b[j]));
        fp.substeps = static_cast<std::size_t>(std::ceil(1.1 * 0.01 / fp_max_dt(25.0 / 5000, bmax)));
        const auto sol = solve_fp(fp);
        const auto masses = mass_path(sol.m);
        const auto expected = eq.mass();
        double emean = 0.0, evar = 0.0, emass = 0.0;
        for (std::size_t k = 0; k < sol.m.t_axis().count; ++k) {
            const double t = sol.m.t_axis().at(k);
            const auto mo = row_moments(sol.m, k);
            emean = std::max(emean, std::abs(mo.mean - eq.rho_at(t)));
            evar = std::max(evar, std::abs(mo.variance - eq.v_at(t)));
            const auto j = static_cast<std::size_t>(std::lround(t * static_cast<double>(p.ode_steps)));
            emass = std::max(emass, std::abs(masses[k] / expected[j] - 1.0));
        }
        o.require(emean <= 2e-2 && evar <= 2e-2,
                  fmt::format("lambda {}: |rho| err {:.2e}, |v| err {:.2e}", lambda, emean, evar));
        o.require(emass <= 2e-2, fmt::format("lambda {}: mass rel err {:.2e}", lambda, emass));
    }
    return o;
}

// ---------------------------------------------------------------- branching

Outcome simulator_fp_duality() {
    Outcome o;
    const auto cfg = preset_config("binary_branching", "gamma = 0.2\ngamma_max = 0.2\nm0_variance = 0.25\n");
    const auto fp_path = default_initial_env(mfg_config(cfg));
    const auto model = branching_model(cfg);
    MeanMeasureOptions opt;
    opt.record_every = 50;
    const auto est = mean_measure(model, no_env, zero_policy, 1, 1e-3, 10000, 2026, opt);
    for (double t : {0.25, 0.5, 1.0}) {
        std::size_t k = 0;
        while (est.path.times[k] < t - 1e-9) ++k;
        const double d = w1(est.path.measures[k], fp_path.at_or_knot(t));
        const double se = est.w1_standard_error(k);
        o.require(d <= 3.0 * se + 2e-2, fmt::format("t={}: W1 {:.4f} vs 3SE+0.02 = {:.4f}", t, d, 3.0 * se + 2e-2));
    }
    return o;
}

std::vector<TestFunction> test_functions() {
    return {{"1", [](double) { return 1.0; }, [](double) { return 0.0; }, [](double) { return 0.0; }},
            {"x", [](double x) { return x; }, [](double) { return 1.0; }, [](double) { return 0.0; }},
            {"x^2", [](double x) { return x * x; }, [](double x) { return 2.0 * x; }, [](double) { return 2.0; }},
            {"tanh", [](double x) { return std::tanh(x); },
             [](double x) { return 1.0 - std::tanh(x) * std::tanh(x); },
             [](double x) {
                 const double th = std::tanh(x);
                 return -2.0 * th * (1.0 - th * th);
             }}};
}

Outcome martingale_suite() {
    Outcome o;
    const auto phis = test_functions();
    std::uint64_t seed = 70;
    for (const char* name : {"pure_death", "binary_branching", "mixed"}) {
        const auto cfg = preset_config(name);
        const auto res = martingale_residual_test(branching_model(cfg), fixed_env(cfg), configured_policy(cfg), phis,
                                                  1, 1e-3, 10000, ++seed, {0.2, 0.4, 0.6, 0.8, 1.0});
        double worst = 0.0;
        bool ok = true;
        for (const auto& row : res)
            for (const auto& r : row) {
                ok = ok && std::abs(r.mean) <= 3.0 * r.standard_error;
                if (r.standard_error > 0.0) worst = std::max(worst, std::abs(r.mean) / r.standard_error);
            }
        o.require(ok, fmt::format("{}: max |mean|/SE = {:.2f}", name, worst));
    }
    return o;
}

Outcome moment_bound() {
    Outcome o;
    std::uint64_t seed = 80;
    for (const char* name : {"pure_diffusion", "binary_branching", "pure_death"}) {
        const auto cfg = preset_config(name);
        const auto model = branching_model(cfg);
        const double gamma = model.death_rate(0.0, 0.0, EnvState{}, 0.0);
        const auto p = model.offspring.constant_probabilities();
        double rate = 0.0;
        for (std::size_t l = 0; l + 1 < p.size(); ++l) rate += static_cast<double>(l) * p[l + 1];
        const std::size_t n0 = 5;
        const double bound = static_cast<double>(n0) * std::exp(gamma * rate * model.horizon);
        const auto s = population_stats(model, no_env, zero_policy, n0, 0.01, 10000, ++seed);
        o.require(s.mean_sup <= bound + 3.0 * s.se_sup,
                  fmt::format("{}: E sup N = {:.3f} vs bound {:.3f} + 3SE", name, s.mean_sup, bound));
    }
    return o;
}

// ---------------------------------------------------------------- measures

FiniteMeasure random_measure(std::mt19937_64& rng, double x0) {
    std::uniform_int_distribution<std::size_t> count(0, 8);
    std::uniform_int_distribution<int> lattice(-12, 12);
    std::uniform_real_distribution<double> weight(0.05, 2.0), fine(-3.0, 3.0);
    std::bernoulli_distribution coarse(0.5);
    std::vector<Atom> atoms(count(rng));
    for (auto& a : atoms) a = {coarse(rng) ? 0.25 * lattice(rng) : fine(rng), weight(rng)};
    return FiniteMeasure::atoms(std::move(atoms), x0);
}

Outcome metric_suite() {
    Outcome o;
    std::mt19937_64 rng(909);
    std::uniform_real_distribution<double> base(-2.0, 2.0);
    std::size_t axioms = 0, duality = 0, augmentation = 0;
    double worst_dual = 0.0, worst_aug = 0.0;
    for (int i = 0; i < 500; ++i) {
        const double x0 = base(rng);
        const auto a = random_measure(rng, x0), b = random_measure(rng, x0), c = random_measure(rng, x0);
        const double ab = w1(a, b), ba = w1(b, a), ac = w1(a, c), cb = w1(c, b);
        const bool ok = ab >= 0.0 && ab == ba && w1(a, a) == 0.0 && ab <= ac + cb + 1e-12 &&
                        (ab > 0.0 || oracle::w1_primal(a, b) < 1e-12);
        axioms += !ok;
        const double primal = oracle::w1_primal(a, b);
        worst_dual = std::max(worst_dual, std::abs(ab - primal));
        duality += std::abs(ab - primal) > 1e-9;
        const double padded = oracle::w1_primal(a, b, 1.0 + 0.01 * i);
        worst_aug = std::max(worst_aug, std::abs(padded - primal));
        augmentation += std::abs(padded - primal) > 1e-9;
    }
    o.require(axioms == 0, fmt::format("metric axioms: {} failures", axioms));
    o.require(duality == 0, fmt::format("dual = primal: worst {:.1e}", worst_dual));
    o.require(augmentation == 0, fmt::format("augmentation invariance: worst {:.1e}", worst_aug));
    return o;
}

// ---------------------------------------------------------------- games

Outcome mfg_fixed_point() {
    Outcome o;
    auto cfg = mfg_config(preset_config("coupled_tanh"));
    cfg.tolerance = 1e-3;
    cfg.max_iterations = 50;
    const auto sol = solve_mfg(cfg);
    o.require(sol.converged, fmt::format("converged in {} iterations, gap {:.2e}", sol.iterations,
                                         sol.gap_history.back()));
    auto classical = cfg;
    classical.model.mean_offspring = [](double) { return 1.0; };
    const auto ref = solve_mfg(classical);
    o.require(ref.converged, "kappa = 0 reference converged");
    const auto m = to_measure_path(sol.m), n = to_measure_path(ref.m);
    double worst = 0.0;
    for (std::size_t k = 0; k < m.size(); ++k)
        worst = std::max(worst, w1(m.measures[k].scaled(std::exp(-0.2 * m.times[k])), n.measures[k]));
    o.require(worst <= 5e-3, fmt::format("normalized sup-W1 {:.2e}", worst));
    return o;
}

Outcome nash_trend() {
    Outcome o;
    const auto cfg = preset_config("coupled_tanh");
    const auto sol = solve_mfg(mfg_config(cfg));
    NashExperiment e;
    e.model = branching_model(cfg);
    e.equilibrium = feedback_policy(sol.du);
    e.deviations = standard_deviations(e.equilibrium);
    e.n_values = {10, 50, 200};
    e.replicas = 10000;
    e.dt = 0.01;
    e.seed = 11;
    const auto r = run_nash(e);
    const auto& lo = r.epsilon.front();
    const auto& hi = r.epsilon.back();
    const double combined = std::sqrt(lo.se * lo.se + hi.se * hi.se);
    std::string trend;
    for (const auto& x : r.epsilon) trend += fmt::format(" eps({})={:.4f}+-{:.4f}", x.n, x.epsilon, x.se);
    o.require(hi.epsilon <= lo.epsilon + 3.0 * combined, "trend" + trend);
    o.require(r.leave_one_out_checks > 0 && r.leave_one_out_violations == 0,
              fmt::format("leave-one-out: {} violations in {} checks, worst ratio {:.4f}", r.leave_one_out_violations,
                          r.leave_one_out_checks, r.leave_one_out_worst_ratio));
    return o;
}

struct Criterion {
    int id;
    const char* name;
    double budget_seconds;
    std::function<Outcome()> run;
};

} // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> criteria = {
        {1, "LQ defaults", 1, lq_defaults},
        {2, "LQ singularity scan", 5, lq_scan},
        {3, "LQ mean shift and sign change", 5, lq_post_singularity},
        {4, "HJB vs closed form", 30, hjb_closed_form},
        {5, "FP vs Gaussian ansatz", 30, fp_gaussian},
        {6, "simulator vs FP", 120, simulator_fp_duality},
        {7, "martingale residuals", 120, martingale_suite},
        {8, "moment bound", 60, moment_bound},
        {9, "W1 metric suite", 10, metric_suite},
        {10, "MFG fixed point", 180, mfg_fixed_point},
        {11, "epsilon-Nash trend", 600, nash_trend},
    };
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

    int failed = 0;
    for (const auto& c : criteria) {
        if (!selected.empty() && !selected.count(c.id)) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = c.run();
        } catch (const std::exception& e) {
            out.ok = false;
            out.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        out.require(secs < c.budget_seconds, fmt::format("runtime {:.2f}s < {}s", secs, c.budget_seconds));
        failed += !out.ok;
        fmt::print("[{}] criterion {:>2}: {} -- {}\n", out.ok ? "PASS" : "FAIL", c.id, c.name, out.detail);
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
