#pragma once

// Finite non-negative measures on the real line and the Wasserstein-type
// distance W1 that compares measures of different total mass through a
// cemetery point at distance |x - x0| + 1 from every x.

#include "bmfg/grid.hpp"

#include <span>
#include <string>
#include <variant>
#include <vector>

namespace bmfg {

struct Atom {
    double position = 0.0;
    double weight = 0.0;
};

/// Density sampled at cell centers; mass of cell i is values[i] * cells.step.
struct DensityCells {
    UniformAxis cells;
    std::vector<double> values;
};

class FiniteMeasure {
public:
    /// The zero measure.
    FiniteMeasure() = default;

    static FiniteMeasure atoms(std::vector<Atom> atoms, double base_point = 0.0);
    static FiniteMeasure density(UniformAxis cells, std::vector<double> values,
                                 double base_point = 0.0);
    static FiniteMeasure dirac(double position, double weight = 1.0, double base_point = 0.0) {
        return atoms({{position, weight}}, base_point);
    }

    bool is_density() const { return std::holds_alternative<DensityCells>(rep_); }
    double base_point() const { return base_point_; }

    /// Atom view; density cells become atoms at their centers.
    std::vector<Atom> to_atoms() const;
    /// Only valid for atom measures.
    std::span<const Atom> atom_list() const;
    /// Only valid for density measures.
    const DensityCells& density_cells() const;

    /// Returns a copy with every weight multiplied by `factor` (>= 0).
    FiniteMeasure scaled(double factor) const;

private:
    std::variant<std::vector<Atom>, DensityCells> rep_;
    double base_point_ = 0.0;
};

double mass(const FiniteMeasure& m);
/// Integral of |x|^p, p in {1, 2}.
double moment(const FiniteMeasure& m, int p);
/// Signed first moment divided by the mass; 0 for the zero measure.
double normalized_mean(const FiniteMeasure& m);

/// W1(mu, nu) = sup over 1-Lipschitz phi with phi(x0) = 0 of (mu - nu)(phi)
///              + |mu(R) - nu(R)|,
/// computed exactly from tail integrals of the signed measure mu - nu.
/// Throws ConfigError when the base points differ.
double w1(const FiniteMeasure& mu, const FiniteMeasure& nu);

/// (1 - weight) * a + weight * b. Density measures on the same cells are
/// combined cellwise; anything else falls back to concatenated atoms.
FiniteMeasure mix(const FiniteMeasure& a, const FiniteMeasure& b, double weight);

/// A measure-valued path sampled on time knots. Between knots the path is the
/// left-continuous step function: for t in (t_k, t_{k+1}] it takes the value at t_k.
struct MeasurePath {
    std::vector<double> times;
    std::vector<FiniteMeasure> measures;

    std::size_t size() const { return times.size(); }
    std::size_t index_at(double t) const;
    const FiniteMeasure& at(double t) const { return measures[index_at(t)]; }
    /// The value at the knot within 1e-9 of t if there is one, else at(t).
    const FiniteMeasure& at_or_knot(double t) const;
};

/// The same measure at every time knot.
MeasurePath constant_path(const std::vector<double>& times, const FiniteMeasure& m);

/// max over the shared knots of w1. Throws ConfigError if the time grids differ (tol 1e-12).
double w1_sup_over_time(const MeasurePath& a, const MeasurePath& b);

/// Convex combination knot by knot; grids must match.
MeasurePath mix(const MeasurePath& a, const MeasurePath& b, double weight);

// CSV formats. Atoms: header `position,weight`. Density: a first line
// `# cell_width=<w> base_point=<x0>` then header `x_cell_center,density_value`.
void write_atoms_csv(const std::string& path, const FiniteMeasure& m);
void write_density_csv(const std::string& path, const FiniteMeasure& m);
/// Detects the format from the header. Atom files take `base_point` from the argument.
FiniteMeasure read_measure_csv(const std::string& path, double base_point = 0.0);

/// Long format `t,position,weight` for a whole path (density paths use cell centers
/// and cell masses).
void write_path_csv(const std::string& path, const MeasurePath& p);

} // namespace bmfg
