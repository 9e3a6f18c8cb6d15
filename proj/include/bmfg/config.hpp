#pragma once

// Experiment configuration: line-oriented `key = value` pairs, `[section]`
// headers and `#` comments. Every key is declared in a schema with a type,
// default and admissible range; parsing reports all problems with their line.

#include "bmfg/expr.hpp"

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bmfg::config {

enum class Type { number, integer, text, expression, number_list, boolean };

struct Value {
    Type type = Type::number;
    std::string source;  // the text as written (or the default)
    double number = 0.0;
    long long integer = 0;
    bool boolean = false;
    std::vector<double> list;
    std::size_t line = 0;  // 0 unless read from the document
    bool given = false;    // set in the document or overridden
    bool from_preset = false;
};

struct Diagnostic {
    std::size_t line = 0;
    std::string message;
    std::string to_string() const;
};

struct KeySpec {
    std::string_view section;
    std::string_view key;
    Type type;
    std::string_view fallback;
    std::string_view help;
    double min = -1e300;
    double max = 1e300;
    bool min_open = false;
    bool max_open = false;
};

/// The full schema, in documentation order.
const std::vector<KeySpec>& schema();

/// Commands understood by the driver.
const std::vector<std::string_view>& commands();

/// Named sets of [model] values.
const std::map<std::string, std::map<std::string, std::string>>& presets();

class ExperimentConfig {
public:
    const Value& get(std::string_view section, std::string_view key) const;
    double number(std::string_view section, std::string_view key) const { return get(section, key).number; }
    long long integer(std::string_view section, std::string_view key) const { return get(section, key).integer; }
    bool flag(std::string_view section, std::string_view key) const { return get(section, key).boolean; }
    const std::string& text(std::string_view section, std::string_view key) const { return get(section, key).source; }
    const std::vector<double>& list(std::string_view section, std::string_view key) const {
        return get(section, key).list;
    }
    expr::Expression expression(std::string_view section, std::string_view key) const;
    bool is_explicit(std::string_view section, std::string_view key) const { return get(section, key).given; }

    /// Replaces one value (used for command-line overrides). Returns the
    /// problems found, empty on success.
    std::vector<Diagnostic> set(std::string_view section, std::string_view key, std::string_view text);

    /// `section.key = value` for every schema entry, in schema order.
    std::vector<std::pair<std::string, std::string>> resolved() const;

    std::string command() const { return text("", "command"); }

    std::map<std::pair<std::string, std::string>, Value> values;
};

struct ParseResult {
    ExperimentConfig config;
    std::vector<Diagnostic> errors;
    bool ok() const { return errors.empty(); }
};

ParseResult parse_config(std::string_view text);

} // namespace bmfg::config
