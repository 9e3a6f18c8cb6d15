#pragma once

// Coefficient expressions: literals, variables t x mass mean a, + - * / ^,
// exp log sqrt tanh abs min max, parentheses. ^ is right-associative and
// binds tighter than unary minus, so -x^2 is -(x^2).

#include <array>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace bmfg::expr {

enum class Var { t, x, mass, mean, a };
inline constexpr std::size_t kVarCount = 5;

enum class Fn { exp, log, sqrt, tanh, abs, min, max };

struct Node {
    enum class Kind { number, variable, negate, add, sub, mul, div, pow, call } kind = Kind::number;
    double value = 0.0;
    Var var = Var::t;
    Fn fn = Fn::exp;
    std::vector<Node> args;

    friend bool operator==(const Node&, const Node&) = default;
};

/// Thrown with the column (1-based) of the offending character.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t column);
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t column_;
};

Node parse(std::string_view source);

/// Fully parenthesized text that parses back to the same tree.
std::string print(const Node& node);

/// Compiled form: a flat stack program.
class Expression {
public:
    Expression() : Expression(parse("0")) {}
    explicit Expression(const Node& tree);
    static Expression compile(std::string_view source) { return Expression(parse(source)); }

    double operator()(double t, double x, double mass = 0.0, double mean = 0.0, double a = 0.0) const;

    bool uses(Var v) const { return uses_[static_cast<std::size_t>(v)]; }
    /// True when no variable occurs; value() then gives the constant.
    bool is_constant() const;
    double value() const { return (*this)(0.0, 0.0); }
    const std::string& text() const { return text_; }

private:
    struct Op {
        enum Code : unsigned char { push, load, neg, add, sub, mul, div, pow, exp, log, sqrt, tanh, abs, min, max } code;
        unsigned char slot = 0;
        double value = 0.0;
    };
    std::vector<Op> program_;
    std::size_t depth_ = 0;
    std::array<bool, kVarCount> uses_{};
    std::string text_;

    void emit(const Node& node, std::size_t& depth, std::size_t& max_depth);
};

} // namespace bmfg::expr
