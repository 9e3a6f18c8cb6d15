#include "bmfg/errors.hpp"
#include "bmfg/measures.hpp"
#include "oracles/transport.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

using namespace bmfg;

namespace {

// Up to 8 atoms on a coarse lattice so that ties and coincident atoms occur.
FiniteMeasure random_measure(std::mt19937_64& rng, double x0 = 0.0, std::size_t max_atoms = 8) {
    std::uniform_int_distribution<std::size_t> count(0, max_atoms);
    std::uniform_int_distribution<int> lattice(-12, 12);
    std::uniform_real_distribution<double> weight(0.05, 2.0);
    std::bernoulli_distribution coarse(0.5);
    std::uniform_real_distribution<double> fine(-3.0, 3.0);
    std::vector<Atom> atoms(count(rng));
    for (auto& a : atoms) a = {coarse(rng) ? 0.25 * lattice(rng) : fine(rng), weight(rng)};
    return FiniteMeasure::atoms(std::move(atoms), x0);
}

} // namespace

TEST_CASE("mass examples") {
    CHECK(mass(FiniteMeasure::dirac(0.0)) == 1.0);
    CHECK(mass(FiniteMeasure::atoms({})) == 0.0);
    CHECK(mass(FiniteMeasure()) == 0.0);

    const auto cells = UniformAxis::cell_centers(-8.0, 8.0, 1600);
    std::vector<double> v(cells.count);
    for (std::size_t i = 0; i < cells.count; ++i)
        v[i] = std::exp(-0.5 * cells.at(i) * cells.at(i)) / std::sqrt(2.0 * std::numbers::pi);
    // composite trapezoid on the cell faces as the reference value
    double trap = 0.0;
    const auto faces = UniformAxis::knots(-8.0, 8.0, 1600);
    for (std::size_t i = 0; i + 1 < faces.count; ++i) {
        auto phi = [](double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); };
        trap += 0.5 * faces.step * (phi(faces.at(i)) + phi(faces.at(i + 1)));
    }
    const auto m = FiniteMeasure::density(cells, v);
    CHECK(mass(m) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(std::abs(mass(m) - trap) < 1e-6);
}

TEST_CASE("moment examples") {
    CHECK(moment(FiniteMeasure::dirac(3.0), 1) == 3.0);
    CHECK(moment(FiniteMeasure::dirac(3.0), 2) == 9.0);
    CHECK(moment(FiniteMeasure::atoms({{-1.0, 2.0}, {2.0, 1.0}}), 2) == 6.0);
    CHECK(moment(FiniteMeasure::atoms({{-1.0, 2.0}, {2.0, 1.0}}), 1) == 4.0);
    CHECK_THROWS_AS(moment(FiniteMeasure::dirac(1.0), 3), ConfigError);
}

TEST_CASE("normalized mean") {
    CHECK(normalized_mean(FiniteMeasure::atoms({{-1.0, 2.0}, {2.0, 1.0}})) == doctest::Approx(0.0));
    CHECK(normalized_mean(FiniteMeasure::atoms({{1.0, 3.0}, {3.0, 1.0}})) == doctest::Approx(1.5));
    CHECK(normalized_mean(FiniteMeasure()) == 0.0);
}

TEST_CASE("w1 examples") {
    CHECK(w1(FiniteMeasure::dirac(1.0), FiniteMeasure::dirac(-1.0)) == doctest::Approx(2.0).epsilon(1e-15));
    const auto mu = FiniteMeasure::atoms({{0.3, 1.0}, {-2.0, 0.5}, {4.0, 0.25}});
    CHECK(w1(mu, mu) == 0.0);
    CHECK(w1(FiniteMeasure::dirac(1.0), FiniteMeasure::dirac(1.0, 2.0)) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(oracle::w1_primal(FiniteMeasure::dirac(1.0), FiniteMeasure::dirac(1.0, 2.0)) ==
          doctest::Approx(2.0).epsilon(1e-15));
    // mass removed to the cemetery from x costs |x - x0| + 1
    CHECK(w1(FiniteMeasure::dirac(3.0, 1.0, 1.0), FiniteMeasure::atoms({}, 1.0)) ==
          doctest::Approx(3.0));
    CHECK_THROWS_AS(w1(FiniteMeasure::dirac(0.0, 1.0, 0.0), FiniteMeasure::dirac(0.0, 1.0, 1.0)), ConfigError);
}

TEST_CASE("w1 agrees with the transport oracle on random 5-atom instances") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        const auto a = random_measure(rng, 0.0, 5), b = random_measure(rng, 0.0, 5);
        CHECK(std::abs(w1(a, b) - oracle::w1_primal(a, b)) < 1e-9);
    }
}

TEST_CASE("w1 metric properties") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> base(-1.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const double x0 = trial % 4 == 0 ? base(rng) : 0.0;
        const auto a = random_measure(rng, x0), b = random_measure(rng, x0), c = random_measure(rng, x0);
        const double ab = w1(a, b), ba = w1(b, a), ac = w1(a, c), cb = w1(c, b);
        CHECK(ab >= 0.0);
        CHECK(std::abs(ab - ba) <= 1e-12);
        CHECK(ab <= ac + cb + 1e-10);
        CHECK(std::abs(mass(a) - mass(b)) <= ab + 1e-12);
        CHECK(w1(a, a) == 0.0);

        const double primal = oracle::w1_primal(a, b);
        CHECK(std::abs(ab - primal) < 1e-9);
        CHECK(std::abs(primal - oracle::w1_primal(a, b, 2.75)) < 1e-9);
    }
}

TEST_CASE("w1 vanishes only on equal measures") {
    // same measure written with split and reordered atoms
    const auto a = FiniteMeasure::atoms({{1.0, 0.5}, {-2.0, 1.0}, {1.0, 0.25}});
    const auto b = FiniteMeasure::atoms({{-2.0, 0.75}, {1.0, 0.75}, {-2.0, 0.25}});
    CHECK(w1(a, b) <= 1e-12);
    const auto c = FiniteMeasure::atoms({{1.0, 0.75}, {-2.0, 1.0 + 1e-6}});
    CHECK(w1(a, c) > 0.0);
    const auto d = FiniteMeasure::atoms({{1.0 + 1e-6, 0.75}, {-2.0, 1.0}});
    CHECK(w1(a, d) > 0.0);
}

TEST_CASE("density measures are compared through their cell-centre atoms") {
    const auto cells = UniformAxis::cell_centers(0.0, 1.0, 4);
    const auto m = FiniteMeasure::density(cells, {1.0, 1.0, 1.0, 1.0});
    CHECK(mass(m) == doctest::Approx(1.0));
    const auto atoms = FiniteMeasure::atoms({{0.125, 0.25}, {0.375, 0.25}, {0.625, 0.25}, {0.875, 0.25}});
    CHECK(w1(m, atoms) < 1e-12);
    CHECK(w1(m, FiniteMeasure::dirac(0.5)) == doctest::Approx(0.25));
}

TEST_CASE("w1_sup_over_time examples") {
    const std::vector<double> t = {0.0, 0.5, 1.0};
    const auto a = constant_path(t, FiniteMeasure::dirac(0.0));
    CHECK(w1_sup_over_time(a, a) == 0.0);
    auto b = a;
    b.measures.back() = FiniteMeasure::dirac(1.0);
    CHECK(w1_sup_over_time(a, b) == doctest::Approx(1.0));
    CHECK(w1_sup_over_time(a, constant_path(t, FiniteMeasure::dirac(0.0, 2.0))) == doctest::Approx(1.0));
    CHECK_THROWS_AS(w1_sup_over_time(a, constant_path({0.0, 1.0}, FiniteMeasure())), ConfigError);
}

TEST_CASE("measure paths are left-continuous step functions") {
    MeasurePath p;
    p.times = {0.0, 0.5, 1.0};
    p.measures = {FiniteMeasure::dirac(0.0), FiniteMeasure::dirac(1.0), FiniteMeasure::dirac(2.0)};
    CHECK(p.index_at(0.0) == 0);
    CHECK(p.index_at(0.25) == 0);
    CHECK(p.index_at(0.5) == 0);
    CHECK(p.index_at(0.5000001) == 1);
    CHECK(p.index_at(1.0) == 1);
    CHECK(&p.at_or_knot(0.5) == &p.measures[1]);
    CHECK(&p.at_or_knot(1.0) == &p.measures[2]);
}

TEST_CASE("mix is a convex combination") {
    const auto a = FiniteMeasure::dirac(0.0), b = FiniteMeasure::dirac(2.0, 2.0);
    const auto m = mix(a, b, 0.25);
    CHECK(mass(m) == doctest::Approx(1.25));
    CHECK(moment(m, 1) == doctest::Approx(1.0));
    const auto cells = UniformAxis::cell_centers(0.0, 1.0, 4);
    const auto d = mix(FiniteMeasure::density(cells, {1, 1, 1, 1}), FiniteMeasure::density(cells, {3, 3, 3, 3}), 0.5);
    REQUIRE(d.is_density());
    CHECK(d.density_cells().values[2] == doctest::Approx(2.0));
}

TEST_CASE("csv round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "bmfg_measures_test";
    std::filesystem::create_directories(dir);
    const auto atoms = FiniteMeasure::atoms({{0.1, 0.3}, {-1.0 / 3.0, 2.0}}, 0.5);
    write_atoms_csv((dir / "a.csv").string(), atoms);
    const auto back = read_measure_csv((dir / "a.csv").string(), 0.5);
    CHECK(w1(atoms, back) < 1e-13);

    const auto cells = UniformAxis::cell_centers(-1.0, 1.0, 8);
    const auto dens = FiniteMeasure::density(cells, {0, 1, 2, 3, 4, 3, 2, 1}, -0.25);
    write_density_csv((dir / "d.csv").string(), dens);
    const auto dback = read_measure_csv((dir / "d.csv").string());
    REQUIRE(dback.is_density());
    CHECK(dback.base_point() == -0.25);
    CHECK(dback.density_cells().cells.step == doctest::Approx(0.25));
    CHECK(w1(dens, dback) < 1e-13);
    CHECK_THROWS(read_measure_csv((dir / "missing.csv").string()));
    std::filesystem::remove_all(dir);
}
