#include "bmfg/grid.hpp"

#include "bmfg/csv.hpp"
#include "bmfg/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace bmfg {

UniformAxis UniformAxis::knots(double lo, double hi, std::size_t intervals) {
    if (!(hi > lo) || intervals == 0)
        throw ConfigError("axis needs hi > lo and at least one interval");
    return {lo, (hi - lo) / static_cast<double>(intervals), intervals + 1};
}

UniformAxis UniformAxis::cell_centers(double lo, double hi, std::size_t cells) {
    if (!(hi > lo) || cells == 0) throw ConfigError("axis needs hi > lo and at least one cell");
    const double h = (hi - lo) / static_cast<double>(cells);
    return {lo + 0.5 * h, h, cells};
}

bool UniformAxis::same_as(const UniformAxis& other, double tol) const {
    return count == other.count && std::abs(start - other.start) <= tol &&
           std::abs(step - other.step) <= tol;
}

GridFunction::GridFunction(UniformAxis t, UniformAxis x, double fill)
    : t_(t), x_(x), values_(t.count * x.count, fill) {}

GridFunction::GridFunction(UniformAxis t, UniformAxis x, std::vector<double> values)
    : t_(t), x_(x), values_(std::move(values)) {
    if (values_.size() != t_.count * x_.count)
        throw ConfigError("grid values do not match the axis sizes");
}

namespace {

// Fractional index of `v` on `axis`, clamped to [0, count-1].
std::pair<std::size_t, double> locate(const UniformAxis& axis, double v) {
    if (axis.count <= 1) return {0, 0.0};
    double s = (v - axis.start) / axis.step;
    const double last = static_cast<double>(axis.count - 1);
    if (!(s > 0.0)) return {0, 0.0};
    if (s >= last) return {axis.count - 2, 1.0};
    auto i = static_cast<std::size_t>(s);
    return {i, s - static_cast<double>(i)};
}

} // namespace

double GridFunction::interpolate(double t, double x) const {
    auto [it, ft] = locate(t_, t);
    auto [ix, fx] = locate(x_, x);
    auto at = [&](std::size_t a, std::size_t b) {
        return (*this)(std::min(a, t_.count - 1), std::min(b, x_.count - 1));
    };
    const double lo = (1.0 - fx) * at(it, ix) + fx * at(it, ix + 1);
    if (t_.count <= 1) return lo;
    const double hi = (1.0 - fx) * at(it + 1, ix) + fx * at(it + 1, ix + 1);
    return (1.0 - ft) * lo + ft * hi;
}

double GridFunction::max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
}

bool GridFunction::all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

void solve_tridiagonal(std::span<const double> lower, std::span<const double> diag,
                       std::span<const double> upper, std::span<double> rhs,
                       std::vector<double>& scratch) {
    const std::size_t n = diag.size();
    scratch.resize(n);
    double denom = diag[0];
    scratch[0] = n > 1 ? upper[0] / denom : 0.0;
    rhs[0] /= denom;
    for (std::size_t i = 1; i < n; ++i) {
        denom = diag[i] - lower[i] * scratch[i - 1];
        scratch[i] = i + 1 < n ? upper[i] / denom : 0.0;
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / denom;
    }
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= scratch[i] * rhs[i + 1];
}

void write_grid_csv(const std::string& path, const GridFunction& g) {
    csv::Writer w(path);
    w.header({"t", "x", "value"});
    for (std::size_t it = 0; it < g.t_axis().count; ++it)
        for (std::size_t ix = 0; ix < g.x_axis().count; ++ix)
            w.row({g.t_axis().at(it), g.x_axis().at(ix), g(it, ix)});
}

void write_grid_matrix(const std::string& path, const GridFunction& g) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << g.x_axis().count;
    for (std::size_t ix = 0; ix < g.x_axis().count; ++ix) out << ' ' << csv::number(g.x_axis().at(ix));
    out << '\n';
    for (std::size_t it = 0; it < g.t_axis().count; ++it) {
        out << csv::number(g.t_axis().at(it));
        for (double v : g.row(it)) out << ' ' << csv::number(v);
        out << '\n';
    }
}

} // namespace bmfg
