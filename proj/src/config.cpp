#include "bmfg/config.hpp"

#include "bmfg/csv.hpp"
#include "bmfg/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace bmfg::config {

std::string Diagnostic::to_string() const {
    return line ? fmt::format("line {}: {}", line, message) : message;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

KeySpec key(std::string_view section, std::string_view name, Type type, std::string_view fallback,
            std::string_view help, double min = -kInf, double max = kInf, bool min_open = false,
            bool max_open = false) {
    return {section, name, type, fallback, help, min, max, min_open, max_open};
}

} // namespace

const std::vector<KeySpec>& schema() {
    using T = Type;
    static const std::vector<KeySpec> keys = {
        key("", "command", T::text, "", "lq, scan, hjb, fp, mfg, simulate, nash or w1"),
        key("", "seed", T::integer, "0", "root seed of every random stream", 0, 9.007199254740992e15),
        key("", "threads", T::integer, "1", "worker threads for replicas and scans (0 = all cores)", 0, 4096),

        key("lq", "T", T::number, "1", "horizon", 0, kInf, true),
        key("lq", "gamma", T::number, "0.2", "death rate", 0, kInf, true),
        key("lq", "lambda", T::number, "0", "branching intensity of the x^2 source", 0),
        key("lq", "delta", T::number, "0.5", "weight of the distance to the population mean", 0, kInf, true),
        key("lq", "x0", T::number, "5", "target position"),
        key("lq", "rho0", T::number, "0", "initial mean"),
        key("lq", "v0", T::number, "1", "initial variance", 0, kInf, true),
        key("lq", "ode_steps", T::integer, "1000", "RK4 steps on [0, T]", 100, 1e8),

        key("scan", "lambda_min", T::number, "0.40", "first lambda of the scan", 0),
        key("scan", "lambda_max", T::number, "0.60", "last lambda of the scan", 0),
        key("scan", "lambda_step", T::number, "0.01", "scan spacing", 0, kInf, true),
        key("scan", "figure_lambdas", T::number_list, "0, 0.35, 0.52, 0.54", "lambdas drawn in the figure", 0),

        key("model", "preset", T::text, "", "named model whose values fill unset [model] keys"),
        key("model", "T", T::number, "1", "horizon", 0, kInf, true),
        key("model", "f", T::expression, "0", "running cost f(t, x, mass, mean) added to a^2 / 2"),
        key("model", "g", T::expression, "0", "terminal cost g(x, mass, mean)"),
        key("model", "gamma", T::expression, "0", "death rate"),
        key("model", "gamma_max", T::number, "0", "bound on gamma used for thinning (0: take constant gamma)", 0),
        key("model", "offspring", T::number_list, "0, 1", "offspring probabilities p_0, p_1, ...", 0),
        key("model", "max_offspring", T::integer, "4", "truncation of the offspring law", 1, 64),
        key("model", "mean_offspring", T::expression, "",
            "sum l p_l(x) for the PDE solvers (empty: from `offspring`)"),
        key("model", "drift", T::expression, "a", "particle drift b(t, x, mass, mean, a)"),
        key("model", "sigma", T::expression, "sqrt(2)", "particle volatility"),
        key("model", "policy", T::expression, "0", "feedback control a(t, x) for simulate"),
        key("model", "m0_mean", T::number, "0", "mean of the Gaussian initial law"),
        key("model", "m0_variance", T::number, "0.25", "variance of the initial law (0: Dirac)", 0),

        key("grid", "x_lo", T::number, "-8", "left end of the space domain"),
        key("grid", "x_hi", T::number, "8", "right end of the space domain"),
        key("grid", "cells", T::integer, "320", "space intervals", 4, 1e7),
        key("grid", "time_steps", T::integer, "400", "time steps on [0, T]", 1, 1e8),
        key("grid", "fp_substeps", T::integer, "1", "Fokker-Planck steps per time step", 1, 1e6),
        key("grid", "record_every", T::integer, "1", "keep every n-th time knot of m in outputs", 1, 1e8),

        key("env", "mass", T::number, "1", "mass of the fixed environment", 0),
        key("env", "mean", T::number, "0", "position of the fixed environment"),

        key("mfg", "damping", T::number, "0.5", "weight of psi(env) in the update", 0, 1, true, false),
        key("mfg", "max_iterations", T::integer, "50", "update budget", 1, 1e6),
        key("mfg", "tolerance", T::number, "1e-3", "stop when sup_t w1(env, psi(env)) is below", 0, kInf, true),

        key("simulate", "n0", T::integer, "1", "initial particles per replica", 1, 4e9),
        key("simulate", "dt", T::number, "1e-3", "Euler step", 0, kInf, true),
        key("simulate", "replicas", T::integer, "1", "independent replicas (1: also write the event log)", 1, 4e9),
        key("simulate", "record_every", T::integer, "1", "snapshot decimation in steps", 1, 1e9),
        key("simulate", "max_population", T::integer, "1000000", "population cap", 1, 1e12),
        key("simulate", "batches", T::integer, "20", "replica batches for w1 standard errors", 2, 1e6),

        key("nash", "n_values", T::number_list, "10, 50, 200", "initial population sizes", 1),
        key("nash", "replicas", T::integer, "1000", "paired replicas per n", 2, 4e9),
        key("nash", "dt", T::number, "0.01", "Euler step", 0, kInf, true),
        key("nash", "common_random_numbers", T::boolean, "true", "share random streams between paired runs"),
        key("nash", "full_check_replicas", T::integer, "20", "replicas checked for every particle", 0, 4e9),

        key("w1", "a", T::text, "", "first measure CSV"),
        key("w1", "b", T::text, "", "second measure CSV"),
        key("w1", "base_point", T::number, "0", "x0 of the cemetery construction"),
    };
    return keys;
}

const std::vector<std::string_view>& commands() {
    static const std::vector<std::string_view> names = {"lq", "scan", "hjb", "fp", "mfg", "simulate", "nash", "w1"};
    return names;
}

const std::map<std::string, std::map<std::string, std::string>>& presets() {
    static const std::map<std::string, std::map<std::string, std::string>> table = {
        {"pure_diffusion", {{"gamma", "0"}, {"offspring", "0, 1"}, {"m0_variance", "0"}}},
        {"pure_death", {{"gamma", "1"}, {"gamma_max", "1"}, {"offspring", "1"}, {"m0_variance", "0"}}},
        {"binary_branching", {{"gamma", "1"}, {"gamma_max", "1"}, {"offspring", "0, 0, 1"}, {"m0_variance", "0"}}},
        {"mixed",
         {{"gamma", "0.5 + 0.5*tanh(x)"},
          {"gamma_max", "1"},
          {"offspring", "0.2, 0.3, 0.3, 0.2"},
          {"policy", "-0.5*x"},
          {"m0_variance", "0.25"}}},
        {"coupled_tanh",
         {{"gamma", "0.2"},
          {"gamma_max", "0.2"},
          {"offspring", "0, 0, 1"},
          {"f", "tanh(mean - x)"},
          {"g", "0"},
          {"m0_variance", "0.25"}}},
        {"lq",
         {{"gamma", "0.2"},
          {"gamma_max", "0.2"},
          {"offspring", "0, 1"},
          {"mean_offspring", "1"},
          {"g", "0.5*(x - 5)^2 + 0.25*(x - mean)^2"},
          {"m0_variance", "1"}}},
    };
    return table;
}

namespace {

const KeySpec* find_key(std::string_view section, std::string_view name) {
    for (const auto& k : schema())
        if (k.section == section && k.key == name) return &k;
    return nullptr;
}

bool known_section(std::string_view section) {
    return std::any_of(schema().begin(), schema().end(), [&](const KeySpec& k) { return k.section == section; });
}

std::string where(const KeySpec& k) {
    return k.section.empty() ? std::string(k.key) : fmt::format("[{}] {}", k.section, k.key);
}

std::string range_text(const KeySpec& k) {
    std::string lo = std::isfinite(k.min) ? fmt::format("{} {}", k.min_open ? ">" : ">=", k.min) : "";
    std::string hi = std::isfinite(k.max) ? fmt::format("{} {}", k.max_open ? "<" : "<=", k.max) : "";
    if (!lo.empty() && !hi.empty()) return lo + " and " + hi;
    return lo + hi;
}

bool in_range(const KeySpec& k, double v) {
    if (k.min_open ? !(v > k.min) : !(v >= k.min)) return false;
    if (k.max_open ? !(v < k.max) : !(v <= k.max)) return false;
    return true;
}

std::optional<Value> convert(const KeySpec& k, std::string_view raw, std::size_t line,
                             std::vector<Diagnostic>& errors) {
    Value v;
    v.type = k.type;
    v.line = line;
    std::string_view text = csv::trim(raw);
    if (text.size() >= 2 && text.front() == '"' && text.back() == '"') text = text.substr(1, text.size() - 2);
    v.source = std::string(text);
    auto fail = [&](const std::string& msg) {
        errors.push_back({line, fmt::format("{}: {}", where(k), msg)});
        return std::nullopt;
    };
    auto parse_number = [&](std::string_view token, double& out) {
        try {
            out = csv::parse_double(token, k.key);
            return true;
        } catch (const ConfigError&) {
            return false;
        }
    };
    switch (k.type) {
    case Type::number:
        if (!parse_number(text, v.number)) return fail(fmt::format("'{}' is not a number", text));
        if (!in_range(k, v.number)) return fail(fmt::format("{} is out of range, must be {}", v.number, range_text(k)));
        break;
    case Type::integer: {
        double d = 0.0;
        if (!parse_number(text, d) || d != std::floor(d) || std::abs(d) > 9.007199254740992e15)
            return fail(fmt::format("'{}' is not an integer", text));
        if (!in_range(k, d)) return fail(fmt::format("{} is out of range, must be {}", d, range_text(k)));
        v.integer = static_cast<long long>(d);
        v.number = d;
        break;
    }
    case Type::text: break;
    case Type::expression:
        if (text.empty()) break;
        try {
            expr::parse(text);
        } catch (const expr::ParseError& e) {
            return fail(fmt::format("bad expression '{}': {}", text, e.what()));
        }
        break;
    case Type::number_list:
        for (const auto& token : csv::split(text, ',')) {
            double d = 0.0;
            if (!parse_number(csv::trim(token), d)) return fail(fmt::format("'{}' is not a number", csv::trim(token)));
            if (!in_range(k, d)) return fail(fmt::format("entry {} is out of range, must be {}", d, range_text(k)));
            v.list.push_back(d);
        }
        if (v.list.empty()) return fail("list is empty");
        break;
    case Type::boolean:
        if (text == "true" || text == "yes" || text == "on" || text == "1")
            v.boolean = true;
        else if (text == "false" || text == "no" || text == "off" || text == "0")
            v.boolean = false;
        else
            return fail(fmt::format("'{}' is not a boolean (true/false)", text));
        break;
    }
    return v;
}

void cross_checks(ExperimentConfig& cfg, std::vector<Diagnostic>& errors) {
    auto line_of = [&](std::string_view s, std::string_view k) { return cfg.get(s, k).line; };
    const auto& cmd = cfg.command();
    if (!cmd.empty() && std::find(commands().begin(), commands().end(), cmd) == commands().end())
        errors.push_back({line_of("", "command"), fmt::format("command: unknown command '{}'", cmd)});
    if (!(cfg.number("grid", "x_hi") > cfg.number("grid", "x_lo")))
        errors.push_back({std::max(line_of("grid", "x_hi"), line_of("grid", "x_lo")),
                          "[grid] x_hi must be greater than x_lo"});
    if (cfg.number("scan", "lambda_max") < cfg.number("scan", "lambda_min"))
        errors.push_back({std::max(line_of("scan", "lambda_max"), line_of("scan", "lambda_min")),
                          "[scan] lambda_max must not be below lambda_min"});
    const auto& ns = cfg.list("nash", "n_values");
    for (std::size_t i = 0; i < ns.size(); ++i) {
        if (ns[i] != std::floor(ns[i]))
            errors.push_back({line_of("nash", "n_values"), "[nash] n_values must be integers"});
        else if (i && ns[i] <= ns[i - 1])
            errors.push_back({line_of("nash", "n_values"), "[nash] n_values must be strictly ascending"});
    }
    double total = 0.0;
    for (double p : cfg.list("model", "offspring")) total += p;
    if (!(total > 0.0)) errors.push_back({line_of("model", "offspring"), "[model] offspring probabilities sum to zero"});
    const auto& every = cfg.get("grid", "record_every");
    if (cfg.integer("grid", "time_steps") % every.integer != 0)
        errors.push_back({every.line, "[grid] record_every must divide time_steps"});
}

// Fills [model] keys not given explicitly from the named preset.
void apply_preset(ExperimentConfig& cfg, std::vector<Diagnostic>& errors) {
    auto& values = cfg.values;
    for (auto& [k, slot] : values)
        if (slot.from_preset) {
            std::vector<Diagnostic> ignored;
            slot = *convert(*find_key(k.first, k.second), find_key(k.first, k.second)->fallback, 0, ignored);
        }
    const auto& preset = values[{"model", "preset"}];
    if (preset.source.empty()) return;
    auto it = presets().find(preset.source);
    if (it == presets().end()) {
        std::string names;
        for (const auto& [n, _] : presets()) names += (names.empty() ? "" : ", ") + n;
        errors.push_back({preset.line, fmt::format("[model] preset: unknown preset '{}' (known: {})", preset.source, names)});
        return;
    }
    for (const auto& [k, text_value] : it->second) {
        auto& slot = values[{"model", k}];
        if (slot.given) continue;
        auto v = convert(*find_key("model", k), text_value, 0, errors);
        v->from_preset = true;
        slot = std::move(*v);
    }
}

std::string key_name(std::string_view section, std::string_view key) {
    return section.empty() ? std::string(key) : fmt::format("{}.{}", section, key);
}

} // namespace

const Value& ExperimentConfig::get(std::string_view section, std::string_view key) const {
    auto it = values.find({std::string(section), std::string(key)});
    if (it == values.end()) throw ConfigError("no configuration key " + key_name(section, key));
    return it->second;
}

expr::Expression ExperimentConfig::expression(std::string_view section, std::string_view key) const {
    const auto& v = get(section, key);
    if (v.source.empty()) throw ConfigError(key_name(section, key) + " is empty");
    return expr::Expression::compile(v.source);
}

std::vector<Diagnostic> ExperimentConfig::set(std::string_view section, std::string_view key, std::string_view text) {
    std::vector<Diagnostic> errors;
    const KeySpec* spec = find_key(section, key);
    if (!spec) {
        errors.push_back({0, "unknown key " + key_name(section, key)});
        return errors;
    }
    auto v = convert(*spec, text, 0, errors);
    if (v) {
        v->given = true;
        values[{std::string(section), std::string(key)}] = std::move(*v);
        if (section == "model" && key == "preset") apply_preset(*this, errors);
        cross_checks(*this, errors);
    }
    return errors;
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::resolved() const {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& k : schema()) out.emplace_back(key_name(k.section, k.key), get(k.section, k.key).source);
    return out;
}

ParseResult parse_config(std::string_view text) {
    ParseResult result;
    auto& values = result.config.values;
    auto& errors = result.errors;
    for (const auto& k : schema()) {
        std::vector<Diagnostic> ignored;
        auto v = convert(k, k.fallback, 0, ignored);
        values[{std::string(k.section), std::string(k.key)}] = *v;
    }

    std::string section;
    bool section_ok = true;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = csv::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                errors.push_back({line_no, "section header is missing ']'"});
                section_ok = false;
                continue;
            }
            section = std::string(csv::trim(line.substr(1, line.size() - 2)));
            section_ok = known_section(section) && !section.empty();
            if (!section_ok) errors.push_back({line_no, fmt::format("unknown section [{}]", section)});
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            errors.push_back({line_no, fmt::format("expected `key = value`, got '{}'", line)});
            continue;
        }
        const std::string name(csv::trim(line.substr(0, eq)));
        if (!section_ok) continue;  // already reported at the header
        const KeySpec* spec = find_key(section, name);
        if (!spec) {
            errors.push_back({line_no, section.empty() ? fmt::format("unknown key '{}'", name)
                                                       : fmt::format("unknown key '{}' in [{}]", name, section)});
            continue;
        }
        auto& slot = values[{section, name}];
        if (slot.given) {
            errors.push_back({line_no, fmt::format("{} is already set on line {}", where(*spec), slot.line)});
            continue;
        }
        if (auto v = convert(*spec, line.substr(eq + 1), line_no, errors)) {
            v->given = true;
            slot = std::move(*v);
        }
    }

    apply_preset(result.config, errors);
    cross_checks(result.config, errors);
    std::stable_sort(errors.begin(), errors.end(),
                     [](const Diagnostic& a, const Diagnostic& b) { return a.line < b.line; });
    return result;
}

} // namespace bmfg::config
