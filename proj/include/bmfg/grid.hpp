#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace bmfg {

/// Uniformly spaced points start, start + step, ..., start + (count - 1) * step.
struct UniformAxis {
    double start = 0.0;
    double step = 1.0;
    std::size_t count = 0;

    double at(std::size_t i) const { return start + step * static_cast<double>(i); }
    double back() const { return at(count - 1); }

    /// Knots on [lo, hi] split into `intervals` equal pieces (intervals + 1 points).
    static UniformAxis knots(double lo, double hi, std::size_t intervals);
    /// Centers of `cells` equal cells covering [lo, hi].
    static UniformAxis cell_centers(double lo, double hi, std::size_t cells);

    bool same_as(const UniformAxis& other, double tol = 1e-12) const;
};

/// Values on a (time x space) tensor grid, time-major.
class GridFunction {
public:
    GridFunction() = default;
    GridFunction(UniformAxis t, UniformAxis x, double fill = 0.0);
    GridFunction(UniformAxis t, UniformAxis x, std::vector<double> values);

    const UniformAxis& t_axis() const { return t_; }
    const UniformAxis& x_axis() const { return x_; }

    double& operator()(std::size_t it, std::size_t ix) { return values_[it * x_.count + ix]; }
    double operator()(std::size_t it, std::size_t ix) const { return values_[it * x_.count + ix]; }

    std::span<double> row(std::size_t it) { return {values_.data() + it * x_.count, x_.count}; }
    std::span<const double> row(std::size_t it) const {
        return {values_.data() + it * x_.count, x_.count};
    }
    const std::vector<double>& values() const { return values_; }

    /// Bilinear interpolation; queries outside the grid are clamped to its edges.
    double interpolate(double t, double x) const;

    double max_abs() const;
    bool all_finite() const;

private:
    UniformAxis t_;
    UniformAxis x_;
    std::vector<double> values_;
};

/// Solves a tridiagonal system in place (Thomas algorithm). `rhs` receives the
/// solution. All spans have the same length; lower[0] and upper[n-1] are unused.
void solve_tridiagonal(std::span<const double> lower, std::span<const double> diag,
                       std::span<const double> upper, std::span<double> rhs,
                       std::vector<double>& scratch);

/// Long-format CSV: header `t,x,value`, one row per knot.
void write_grid_csv(const std::string& path, const GridFunction& g);
/// gnuplot `matrix nonuniform` binary-free text layout: first row holds the x
/// knots (prefixed by the count), each following row starts with t.
void write_grid_matrix(const std::string& path, const GridFunction& g);

} // namespace bmfg
