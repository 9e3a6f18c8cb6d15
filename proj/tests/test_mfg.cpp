#include "bmfg/errors.hpp"
#include "bmfg/mfg.hpp"
#include "bmfg/models.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

using namespace bmfg;

namespace {

double gaussian(double x, double mean, double var) {
    return std::exp(-0.5 * (x - mean) * (x - mean) / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

MFGConfig decoupled(double gamma, double mean_offspring) {
    MFGConfig c;
    c.model.f = [](double, double, const EnvState&) { return 0.0; };
    c.model.g = [](double, const EnvState&) { return 0.0; };
    c.model.gamma = [gamma](double) { return gamma; };
    c.model.mean_offspring = [mean_offspring](double) { return mean_offspring; };
    c.model.initial_density = [](double x) { return gaussian(x, 0.0, 0.25); };
    return c;
}

// sup over knots of w1 between exp(-rate t) m(t) and n(t)
double normalized_gap(const MeasurePath& m, const MeasurePath& n, double rate) {
    double worst = 0.0;
    for (std::size_t k = 0; k < m.size(); ++k)
        worst = std::max(worst, w1(m.measures[k].scaled(std::exp(-rate * m.times[k])), n.measures[k]));
    return worst;
}

} // namespace

TEST_CASE("psi of a decoupled model ignores the environment") {
    const auto c = decoupled(0.2, 2.0);
    const auto a = psi_detailed(constant_path({0.0, 1.0}, FiniteMeasure::dirac(3.0)), c);
    const auto b = psi(constant_path({0.0, 1.0}, FiniteMeasure::dirac(-1.0, 4.0)), c);
    CHECK(a.hjb.du.max_abs() < 1e-12);
    CHECK(w1_sup_over_time(a.path, b) == 0.0);
    for (std::size_t k = 0; k < a.path.size(); k += 50)
        CHECK(mass(a.path.measures[k]) == doctest::Approx(std::exp(0.2 * a.path.times[k])).epsilon(1e-4));
}

TEST_CASE("psi without branching is the heat flow") {
    const auto c = decoupled(0.0, 1.0);
    const auto path = psi(default_initial_env(c), c);
    const std::size_t k = path.index_at(0.5) + 1;
    REQUIRE(path.times[k] == doctest::Approx(0.5));
    const auto& cells = path.measures[k].density_cells();
    double l1 = 0.0;
    for (std::size_t i = 0; i < cells.cells.count; ++i)
        l1 += std::abs(cells.values[i] - gaussian(cells.cells.at(i), 0.0, 1.25)) * cells.cells.step;
    CHECK(l1 < 2e-2);
    CHECK(mass(path.measures.back()) == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("decoupled model converges after one update") {
    const auto cfg = decoupled(0.2, 2.0);
    const auto t = cfg.grid.t_axis();
    std::vector<double> knots(t.count);
    for (std::size_t k = 0; k < t.count; ++k) knots[k] = t.at(k);
    const auto sol = solve_mfg(cfg, constant_path(knots, FiniteMeasure::dirac(2.0, 3.0)));
    CHECK(sol.converged);
    CHECK(sol.iterations == 1);
    CHECK(sol.gap_history.front() > 1.0);
    CHECK(sol.gap_history.back() < 1e-12);
    // the default start is already the fixed point
    CHECK(solve_mfg(cfg).iterations == 0);
}

TEST_CASE("coupled model: convergence, residual and normalization") {
    auto cfg = mfg_config(preset_config("coupled_tanh"));
    const auto sol = solve_mfg(cfg);
    REQUIRE(sol.converged);
    CHECK(sol.iterations <= 50);
    CHECK(sol.gap_history.back() <= cfg.tolerance);
    for (std::size_t i = 4; i < sol.gap_history.size(); ++i) CHECK(sol.gap_history[i] <= sol.gap_history[i - 1]);

    const auto m_path = to_measure_path(sol.m);
    CHECK(w1_sup_over_time(m_path, psi(m_path, cfg)) <= 2.0 * cfg.tolerance);

    auto classical = cfg;
    classical.model.mean_offspring = [](double) { return 1.0; };
    const auto ref = solve_mfg(classical);
    REQUIRE(ref.converged);
    CHECK(normalized_gap(m_path, to_measure_path(ref.m), 0.2) <= 5e-3);
}

TEST_CASE("non-convergence is reported") {
    auto cfg = mfg_config(preset_config("coupled_tanh"));
    cfg.max_iterations = 2;
    cfg.tolerance = 1e-9;
    MFGSolution sol;
    CHECK_NOTHROW(sol = solve_mfg(cfg));
    CHECK(!sol.converged);
    CHECK(sol.iterations == 2);
    CHECK(!sol.warnings.empty());

    const auto path = (std::filesystem::temp_directory_path() / "bmfg_gaps.csv").string();
    write_gap_csv(path, sol);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "iteration,gap");
    std::size_t rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == sol.gap_history.size());
    std::filesystem::remove(path);
}

TEST_CASE("iterates stay in a bounded set") {
    // every iterate keeps the second moment of the decoupled flow up to a fixed factor
    auto cfg = mfg_config(preset_config("coupled_tanh"));
    auto env = default_initial_env(cfg);
    auto second = [](const MeasurePath& p) {
        double worst = 0.0;
        for (const auto& m : p.measures) worst = std::max(worst, mass(m) + moment(m, 2));
        return worst;
    };
    const double reference = second(env);
    for (int i = 0; i < 4; ++i) {
        env = mix(env, psi(env, cfg), cfg.damping);
        CHECK(second(env) <= 2.0 * reference);
    }
}

TEST_CASE("configuration checks") {
    auto cfg = decoupled(0.2, 2.0);
    cfg.damping = 0.0;
    CHECK_THROWS_AS(solve_mfg(cfg), ConfigError);
    cfg = decoupled(0.2, 2.0);
    cfg.tolerance = -1.0;
    CHECK_THROWS_AS(solve_mfg(cfg), ConfigError);
}
