#include "bmfg/measures.hpp"

#include "bmfg/csv.hpp"
#include "bmfg/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string_view>

#include <fmt/format.h>

namespace bmfg {

namespace {

constexpr double kMergeTol = 1e-12;

void check_weight(double w, std::string_view what) {
    if (!(w >= 0.0) || !std::isfinite(w))
        throw ConfigError(fmt::format("{} must be finite and non-negative, got {}", what, w));
}

} // namespace

FiniteMeasure FiniteMeasure::atoms(std::vector<Atom> atoms, double base_point) {
    for (const auto& a : atoms) {
        check_weight(a.weight, "atom weight");
        if (!std::isfinite(a.position)) throw ConfigError("atom position must be finite");
    }
    FiniteMeasure m;
    m.rep_ = std::move(atoms);
    m.base_point_ = base_point;
    return m;
}

FiniteMeasure FiniteMeasure::density(UniformAxis cells, std::vector<double> values,
                                     double base_point) {
    if (!(cells.step > 0.0)) throw ConfigError("density cell width must be positive");
    if (values.size() != cells.count) throw ConfigError("density values do not match the cells");
    for (double v : values) check_weight(v, "density value");
    FiniteMeasure m;
    m.rep_ = DensityCells{cells, std::move(values)};
    m.base_point_ = base_point;
    return m;
}

std::vector<Atom> FiniteMeasure::to_atoms() const {
    if (auto* a = std::get_if<std::vector<Atom>>(&rep_)) return *a;
    const auto& d = std::get<DensityCells>(rep_);
    std::vector<Atom> out;
    out.reserve(d.values.size());
    for (std::size_t i = 0; i < d.values.size(); ++i)
        if (d.values[i] > 0.0) out.push_back({d.cells.at(i), d.values[i] * d.cells.step});
    return out;
}

std::span<const Atom> FiniteMeasure::atom_list() const {
    const auto* a = std::get_if<std::vector<Atom>>(&rep_);
    if (!a) throw ConfigError("measure is a density, not an atom list");
    return *a;
}

const DensityCells& FiniteMeasure::density_cells() const {
    const auto* d = std::get_if<DensityCells>(&rep_);
    if (!d) throw ConfigError("measure is an atom list, not a density");
    return *d;
}

FiniteMeasure FiniteMeasure::scaled(double factor) const {
    check_weight(factor, "scale factor");
    FiniteMeasure out = *this;
    if (auto* a = std::get_if<std::vector<Atom>>(&out.rep_)) {
        for (auto& atom : *a) atom.weight *= factor;
    } else {
        for (auto& v : std::get<DensityCells>(out.rep_).values) v *= factor;
    }
    return out;
}

namespace {

template <class F>
double integrate(const FiniteMeasure& m, F&& f) {
    double s = 0.0;
    if (m.is_density()) {
        const auto& d = m.density_cells();
        for (std::size_t i = 0; i < d.values.size(); ++i) s += f(d.cells.at(i)) * d.values[i];
        return s * d.cells.step;
    }
    for (const auto& a : m.atom_list()) s += f(a.position) * a.weight;
    return s;
}

} // namespace

double mass(const FiniteMeasure& m) {
    return integrate(m, [](double) { return 1.0; });
}

double moment(const FiniteMeasure& m, int p) {
    if (p == 1) return integrate(m, [](double x) { return std::abs(x); });
    if (p == 2) return integrate(m, [](double x) { return x * x; });
    throw ConfigError(fmt::format("moment order must be 1 or 2, got {}", p));
}

double normalized_mean(const FiniteMeasure& m) {
    const double total = mass(m);
    if (total <= 0.0) return 0.0;
    return integrate(m, [](double x) { return x; }) / total;
}

double w1(const FiniteMeasure& mu, const FiniteMeasure& nu) {
    if (mu.base_point() != nu.base_point())
        throw ConfigError(fmt::format("w1: base points differ ({} vs {})", mu.base_point(),
                                      nu.base_point()));
    const double x0 = mu.base_point();

    // Signed measure eta = mu - nu as sorted, merged atoms. Positive and
    // negative parts are summed separately in input order so that w1(m, m)
    // is exactly zero.
    std::vector<Atom> eta = mu.to_atoms();
    const std::size_t n_mu = eta.size();
    auto nu_atoms = nu.to_atoms();
    eta.insert(eta.end(), nu_atoms.begin(), nu_atoms.end());
    std::vector<std::size_t> order(eta.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return eta[a].position < eta[b].position; });

    std::vector<double> pos;
    std::vector<double> plus, minus;
    pos.reserve(eta.size());
    double mass_mu = 0.0, mass_nu = 0.0;
    for (std::size_t i : order) {
        const bool from_mu = i < n_mu;
        (from_mu ? mass_mu : mass_nu) += eta[i].weight;
        if (pos.empty() || eta[i].position - pos.back() > kMergeTol) {
            pos.push_back(eta[i].position);
            plus.push_back(0.0);
            minus.push_back(0.0);
        }
        (from_mu ? plus : minus).back() += eta[i].weight;
    }
    std::vector<double> w(pos.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = plus[i] - minus[i];
    const double mass_gap = mass_mu - mass_nu;
    const std::size_t n = pos.size();
    if (n == 0) return 0.0;

    // Right of x0: eta([s, inf)) is constant on (p_{i-1}, p_i].
    double right = 0.0;
    double tail = 0.0;
    for (std::size_t i = n; i-- > 0;) {
        tail += w[i];
        const double lo = std::max(i > 0 ? pos[i - 1] : x0, x0);
        if (pos[i] > lo) right += std::abs(tail) * (pos[i] - lo);
    }
    // Left of x0: eta((-inf, s]) is constant on [p_i, p_{i+1}).
    double left = 0.0;
    double head = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        head += w[i];
        const double hi = std::min(i + 1 < n ? pos[i + 1] : x0, x0);
        if (hi > pos[i]) left += std::abs(head) * (hi - pos[i]);
    }
    return right + left + std::abs(mass_gap);
}

FiniteMeasure mix(const FiniteMeasure& a, const FiniteMeasure& b, double weight) {
    if (!(weight >= 0.0 && weight <= 1.0)) throw ConfigError("mix weight must lie in [0, 1]");
    if (a.base_point() != b.base_point()) throw ConfigError("mix: base points differ");
    if (a.is_density() && b.is_density() &&
        a.density_cells().cells.same_as(b.density_cells().cells)) {
        const auto& da = a.density_cells();
        const auto& db = b.density_cells();
        std::vector<double> v(da.values.size());
        for (std::size_t i = 0; i < v.size(); ++i)
            v[i] = (1.0 - weight) * da.values[i] + weight * db.values[i];
        return FiniteMeasure::density(da.cells, std::move(v), a.base_point());
    }
    auto atoms = a.scaled(1.0 - weight).to_atoms();
    auto rest = b.scaled(weight).to_atoms();
    atoms.insert(atoms.end(), rest.begin(), rest.end());
    return FiniteMeasure::atoms(std::move(atoms), a.base_point());
}

std::size_t MeasurePath::index_at(double t) const {
    if (times.empty()) throw ConfigError("empty measure path");
    auto it = std::lower_bound(times.begin(), times.end(), t);
    if (it == times.begin()) return 0;
    return static_cast<std::size_t>(it - times.begin()) - 1;
}

const FiniteMeasure& MeasurePath::at_or_knot(double t) const {
    const std::size_t i = index_at(t);
    if (i + 1 < times.size() && std::abs(times[i + 1] - t) <= 1e-9) return measures[i + 1];
    return measures[i];
}

MeasurePath constant_path(const std::vector<double>& times, const FiniteMeasure& m) {
    return {times, std::vector<FiniteMeasure>(times.size(), m)};
}

namespace {

void check_same_knots(const MeasurePath& a, const MeasurePath& b) {
    if (a.times.size() != b.times.size() || a.measures.size() != a.times.size() ||
        b.measures.size() != b.times.size())
        throw ConfigError("measure paths have different time grids");
    for (std::size_t i = 0; i < a.times.size(); ++i)
        if (std::abs(a.times[i] - b.times[i]) > 1e-12)
            throw ConfigError(fmt::format("measure paths differ at knot {} ({} vs {})", i,
                                          a.times[i], b.times[i]));
}

} // namespace

double w1_sup_over_time(const MeasurePath& a, const MeasurePath& b) {
    check_same_knots(a, b);
    double gap = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) gap = std::max(gap, w1(a.measures[i], b.measures[i]));
    return gap;
}

MeasurePath mix(const MeasurePath& a, const MeasurePath& b, double weight) {
    check_same_knots(a, b);
    MeasurePath out{a.times, {}};
    out.measures.reserve(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out.measures.push_back(mix(a.measures[i], b.measures[i], weight));
    return out;
}

void write_atoms_csv(const std::string& path, const FiniteMeasure& m) {
    csv::Writer w(path);
    w.header({"position", "weight"});
    for (const auto& a : m.to_atoms()) w.row({a.position, a.weight});
}

void write_density_csv(const std::string& path, const FiniteMeasure& m) {
    const auto& d = m.density_cells();
    csv::Writer w(path);
    w.comment(fmt::format("cell_width={} base_point={}", csv::number(d.cells.step),
                          csv::number(m.base_point())));
    w.header({"x_cell_center", "density_value"});
    for (std::size_t i = 0; i < d.values.size(); ++i) w.row({d.cells.at(i), d.values[i]});
}

FiniteMeasure read_measure_csv(const std::string& path, double base_point) {
    auto table = csv::read(path);
    if (table.header == std::vector<std::string>{"position", "weight"}) {
        std::vector<Atom> atoms;
        atoms.reserve(table.rows.size());
        for (const auto& r : table.rows)
            atoms.push_back({csv::parse_double(r[0], path + " position"),
                             csv::parse_double(r[1], path + " weight")});
        return FiniteMeasure::atoms(std::move(atoms), base_point);
    }
    if (table.header == std::vector<std::string>{"x_cell_center", "density_value"}) {
        double width = 0.0;
        bool have_width = false;
        for (const auto& c : table.comments) {
            for (const auto& field : csv::split(c, ' ')) {
                auto eq = field.find('=');
                if (eq == std::string::npos) continue;
                auto key = field.substr(0, eq);
                auto value = field.substr(eq + 1);
                if (key == "cell_width") {
                    width = csv::parse_double(value, path + " cell_width");
                    have_width = true;
                } else if (key == "base_point") {
                    base_point = csv::parse_double(value, path + " base_point");
                }
            }
        }
        if (!have_width) throw ConfigError(path + ": density file lacks a cell_width header line");
        if (table.rows.empty()) throw ConfigError(path + ": density file has no cells");
        std::vector<double> values;
        values.reserve(table.rows.size());
        const double first = csv::parse_double(table.rows.front()[0], path + " x_cell_center");
        for (std::size_t i = 0; i < table.rows.size(); ++i) {
            const double x = csv::parse_double(table.rows[i][0], path + " x_cell_center");
            if (std::abs(x - (first + width * static_cast<double>(i))) > 1e-9 * std::max(1.0, std::abs(x)))
                throw ConfigError(fmt::format("{}: cell centers are not uniform at row {}", path, i + 1));
            values.push_back(csv::parse_double(table.rows[i][1], path + " density_value"));
        }
        const UniformAxis cells{first, width, values.size()};
        return FiniteMeasure::density(cells, std::move(values), base_point);
    }
    throw ConfigError(path + ": unrecognised measure header");
}

void write_path_csv(const std::string& path, const MeasurePath& p) {
    csv::Writer w(path);
    w.header({"t", "position", "weight"});
    for (std::size_t i = 0; i < p.size(); ++i)
        for (const auto& a : p.measures[i].to_atoms()) w.row({p.times[i], a.position, a.weight});
}

} // namespace bmfg
