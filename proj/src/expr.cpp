#include "bmfg/expr.hpp"

#include <charconv>
#include <cmath>
#include <cctype>
#include <stdexcept>

#include <fmt/format.h>

namespace bmfg::expr {

ParseError::ParseError(const std::string& what, std::size_t column)
    : std::runtime_error(fmt::format("column {}: {}", column, what)), column_(column) {}

namespace {

constexpr std::array<std::string_view, kVarCount> kVarNames{"t", "x", "mass", "mean", "a"};

struct FnInfo {
    std::string_view name;
    Fn fn;
    std::size_t arity;
};
constexpr std::array<FnInfo, 7> kFunctions{{{"exp", Fn::exp, 1},
                                            {"log", Fn::log, 1},
                                            {"sqrt", Fn::sqrt, 1},
                                            {"tanh", Fn::tanh, 1},
                                            {"abs", Fn::abs, 1},
                                            {"min", Fn::min, 2},
                                            {"max", Fn::max, 2}}};

class Parser {
public:
    explicit Parser(std::string_view src) : src_(src) {}

    Node parse_all() {
        Node n = expression();
        skip_space();
        if (pos_ < src_.size()) fail(fmt::format("unexpected '{}'", src_[pos_]));
        return n;
    }

private:
    std::string_view src_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, pos_ + 1); }

    void skip_space() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }
    bool accept(char c) {
        skip_space();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    void expect(char c) {
        if (!accept(c)) fail(fmt::format("expected '{}'", c));
    }

    static Node binary(Node::Kind kind, Node lhs, Node rhs) {
        Node n;
        n.kind = kind;
        n.args.push_back(std::move(lhs));
        n.args.push_back(std::move(rhs));
        return n;
    }

    Node expression() {
        Node lhs = term();
        for (;;) {
            if (accept('+'))
                lhs = binary(Node::Kind::add, std::move(lhs), term());
            else if (accept('-'))
                lhs = binary(Node::Kind::sub, std::move(lhs), term());
            else
                return lhs;
        }
    }

    Node term() {
        Node lhs = unary();
        for (;;) {
            if (accept('*'))
                lhs = binary(Node::Kind::mul, std::move(lhs), unary());
            else if (accept('/'))
                lhs = binary(Node::Kind::div, std::move(lhs), unary());
            else
                return lhs;
        }
    }

    Node unary() {
        if (accept('-')) {
            Node n;
            n.kind = Node::Kind::negate;
            n.args.push_back(unary());
            return n;
        }
        if (accept('+')) return unary();
        return power();
    }

    Node power() {
        Node base = primary();
        if (accept('^')) return binary(Node::Kind::pow, std::move(base), unary());
        return base;
    }

    Node primary() {
        skip_space();
        if (pos_ >= src_.size()) fail("unexpected end of expression");
        const char c = src_[pos_];
        if (c == '(') {
            ++pos_;
            Node n = expression();
            expect(')');
            return n;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return name();
        fail(fmt::format("unexpected '{}'", c));
    }

    Node number() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.')) ++pos_;
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t p = pos_ + 1;
            if (p < src_.size() && (src_[p] == '+' || src_[p] == '-')) ++p;
            if (p < src_.size() && std::isdigit(static_cast<unsigned char>(src_[p]))) {
                pos_ = p;
                while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
            }
        }
        Node n;
        const auto* first = src_.data() + start;
        const auto* last = src_.data() + pos_;
        auto [ptr, ec] = std::from_chars(first, last, n.value);
        if (ec != std::errc() || ptr != last || !std::isfinite(n.value)) {
            pos_ = start;
            fail(fmt::format("malformed number '{}'", std::string_view(first, static_cast<std::size_t>(last - first))));
        }
        return n;
    }

    Node name() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
            ++pos_;
        const std::string_view id = src_.substr(start, pos_ - start);
        for (std::size_t v = 0; v < kVarCount; ++v)
            if (id == kVarNames[v]) {
                Node n;
                n.kind = Node::Kind::variable;
                n.var = static_cast<Var>(v);
                return n;
            }
        for (const auto& f : kFunctions) {
            if (id != f.name) continue;
            Node n;
            n.kind = Node::Kind::call;
            n.fn = f.fn;
            expect('(');
            n.args.push_back(expression());
            for (std::size_t i = 1; i < f.arity; ++i) {
                expect(',');
                n.args.push_back(expression());
            }
            expect(')');
            return n;
        }
        pos_ = start;
        fail(fmt::format("unknown name '{}'", id));
    }
};

std::string_view fn_name(Fn fn) {
    for (const auto& f : kFunctions)
        if (f.fn == fn) return f.name;
    return "?";
}

} // namespace

Node parse(std::string_view source) { return Parser(source).parse_all(); }

std::string print(const Node& node) {
    using K = Node::Kind;
    switch (node.kind) {
    case K::number: {
        char buf[64];
        auto [end, ec] = std::to_chars(buf, buf + sizeof buf, node.value);
        return std::string(buf, end);
    }
    case K::variable: return std::string(kVarNames[static_cast<std::size_t>(node.var)]);
    case K::negate: return "(-" + print(node.args[0]) + ")";
    case K::call: {
        std::string s(fn_name(node.fn));
        s += '(';
        for (std::size_t i = 0; i < node.args.size(); ++i) {
            if (i) s += ", ";
            s += print(node.args[i]);
        }
        return s + ')';
    }
    default: break;
    }
    const char* op = node.kind == K::add ? " + " : node.kind == K::sub ? " - " : node.kind == K::mul ? " * "
                   : node.kind == K::div ? " / " : " ^ ";
    return "(" + print(node.args[0]) + op + print(node.args[1]) + ")";
}

Expression::Expression(const Node& tree) : text_(print(tree)) {
    std::size_t depth = 0;
    emit(tree, depth, depth_);
}

void Expression::emit(const Node& node, std::size_t& depth, std::size_t& max_depth) {
    using K = Node::Kind;
    auto grow = [&] { max_depth = std::max(max_depth, ++depth); };
    switch (node.kind) {
    case K::number:
        program_.push_back({Op::push, 0, node.value});
        grow();
        return;
    case K::variable:
        program_.push_back({Op::load, static_cast<unsigned char>(node.var), 0.0});
        uses_[static_cast<std::size_t>(node.var)] = true;
        grow();
        return;
    default: break;
    }
    for (const auto& arg : node.args) emit(arg, depth, max_depth);
    Op::Code code = Op::neg;
    switch (node.kind) {
    case K::negate: code = Op::neg; break;
    case K::add: code = Op::add; break;
    case K::sub: code = Op::sub; break;
    case K::mul: code = Op::mul; break;
    case K::div: code = Op::div; break;
    case K::pow: code = Op::pow; break;
    case K::call:
        switch (node.fn) {
        case Fn::exp: code = Op::exp; break;
        case Fn::log: code = Op::log; break;
        case Fn::sqrt: code = Op::sqrt; break;
        case Fn::tanh: code = Op::tanh; break;
        case Fn::abs: code = Op::abs; break;
        case Fn::min: code = Op::min; break;
        case Fn::max: code = Op::max; break;
        }
        break;
    default: break;
    }
    program_.push_back({code, 0, 0.0});
    depth -= node.args.size() - 1;
}

bool Expression::is_constant() const {
    for (bool u : uses_)
        if (u) return false;
    return true;
}

double Expression::operator()(double t, double x, double mass, double mean, double a) const {
    const double vars[kVarCount] = {t, x, mass, mean, a};
    double small[32] = {};
    std::vector<double> big;
    double* st = small;
    if (depth_ > 32) {
        big.resize(depth_);
        st = big.data();
    }
    std::size_t sp = 0;
    for (const auto& op : program_) {
        switch (op.code) {
        case Op::push: st[sp++] = op.value; break;
        case Op::load: st[sp++] = vars[op.slot]; break;
        case Op::neg: st[sp - 1] = -st[sp - 1]; break;
        case Op::add: --sp; st[sp - 1] += st[sp]; break;
        case Op::sub: --sp; st[sp - 1] -= st[sp]; break;
        case Op::mul: --sp; st[sp - 1] *= st[sp]; break;
        case Op::div: --sp; st[sp - 1] /= st[sp]; break;
        case Op::pow: --sp; st[sp - 1] = std::pow(st[sp - 1], st[sp]); break;
        case Op::exp: st[sp - 1] = std::exp(st[sp - 1]); break;
        case Op::log: st[sp - 1] = std::log(st[sp - 1]); break;
        case Op::sqrt: st[sp - 1] = std::sqrt(st[sp - 1]); break;
        case Op::tanh: st[sp - 1] = std::tanh(st[sp - 1]); break;
        case Op::abs: st[sp - 1] = std::abs(st[sp - 1]); break;
        case Op::min: --sp; st[sp - 1] = std::min(st[sp - 1], st[sp]); break;
        case Op::max: --sp; st[sp - 1] = std::max(st[sp - 1], st[sp]); break;
        }
    }
    return st[0];
}

} // namespace bmfg::expr
