#pragma once

// Arithmetic expression language for problem data entered as text.
//
// Grammar (lowest to highest precedence):
//
//   expr        := additive
//   additive    := term (('+' | '-') term)*
//   term        := unary (('*' | '/') unary)*
//   unary       := '-' unary | power
//   power       := primary ('^' unary)?          right-associative
//   primary     := number | symbol | func '(' expr ')' | conditional | '(' expr ')'
//   conditional := 'if' '(' additive cmp additive ',' expr ',' expr ')'
//   cmp         := '<' | '<=' | '>' | '>='
//   func        := cos | sin | exp | sqrt | abs
//   symbol      := z | t | pi | eta0
//
// Comparisons are only legal as the condition of `if`.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <numbers>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hyperlq/error.hpp"

namespace hyperlq::expr {

enum class NodeKind { number, symbol, pi, negate, binary, call, conditional };
enum class BinaryOp { add, sub, mul, div, pow };
enum class Function { cos, sin, exp, sqrt, abs };
enum class Comparison { lt, le, gt, ge };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

/// Immutable AST node. `children` holds: negate {operand}, binary {lhs, rhs},
/// call {argument}, conditional {cmp_lhs, cmp_rhs, then, else}.
struct Node {
    NodeKind kind = NodeKind::number;
    double value = 0.0;
    std::string name;
    BinaryOp op = BinaryOp::add;
    Function fn = Function::cos;
    Comparison cmp = Comparison::lt;
    std::vector<NodePtr> children;
};

inline bool structurally_equal(const Node& a, const Node& b) {
    if (a.kind != b.kind || a.children.size() != b.children.size()) return false;
    switch (a.kind) {
        case NodeKind::number:
            if (a.value != b.value) return false;
            break;
        case NodeKind::symbol:
            if (a.name != b.name) return false;
            break;
        case NodeKind::binary:
            if (a.op != b.op) return false;
            break;
        case NodeKind::call:
            if (a.fn != b.fn) return false;
            break;
        case NodeKind::conditional:
            if (a.cmp != b.cmp) return false;
            break;
        default:
            break;
    }
    for (std::size_t i = 0; i < a.children.size(); ++i)
        if (!structurally_equal(*a.children[i], *b.children[i])) return false;
    return true;
}

/// Symbol values for one evaluation. `pi` is always bound implicitly.
class Bindings {
public:
    Bindings() = default;
    Bindings(std::initializer_list<std::pair<std::string, double>> init) {
        for (const auto& [k, v] : init) set(k, v);
    }

    Bindings& set(std::string_view name, double value) {
        for (auto& [k, v] : entries_)
            if (k == name) {
                v = value;
                return *this;
            }
        entries_.emplace_back(std::string(name), value);
        return *this;
    }

    std::optional<double> find(std::string_view name) const {
        for (const auto& [k, v] : entries_)
            if (k == name) return v;
        return std::nullopt;
    }

private:
    std::vector<std::pair<std::string, double>> entries_;
};

namespace detail {

inline const char* function_name(Function f) {
    switch (f) {
        case Function::cos: return "cos";
        case Function::sin: return "sin";
        case Function::exp: return "exp";
        case Function::sqrt: return "sqrt";
        case Function::abs: return "abs";
    }
    return "?";
}

inline const char* comparison_text(Comparison c) {
    switch (c) {
        case Comparison::lt: return "<";
        case Comparison::le: return "<=";
        case Comparison::gt: return ">";
        case Comparison::ge: return ">=";
    }
    return "?";
}

inline std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    // Shortest representation that still round-trips.
    for (int prec = 1; prec <= 17; ++prec) {
        char trial[40];
        std::snprintf(trial, sizeof trial, "%.*g", prec, v);
        if (std::strtod(trial, nullptr) == v) return trial;
    }
    return buf;
}

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    NodePtr parse() {
        NodePtr root = additive();
        skip_ws();
        if (pos_ < text_.size()) fail("operator or end of input");
        return root;
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& expected) const {
        throw SyntaxError(pos_, expected, std::string(text_));
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c)) fail(std::string("'") + c + "'");
    }

    static NodePtr make_binary(BinaryOp op, NodePtr lhs, NodePtr rhs) {
        auto n = std::make_shared<Node>();
        n->kind = NodeKind::binary;
        n->op = op;
        n->children = {std::move(lhs), std::move(rhs)};
        return n;
    }

    NodePtr additive() {
        NodePtr lhs = term();
        for (;;) {
            if (accept('+'))
                lhs = make_binary(BinaryOp::add, lhs, term());
            else if (accept('-'))
                lhs = make_binary(BinaryOp::sub, lhs, term());
            else
                return lhs;
        }
    }

    NodePtr term() {
        NodePtr lhs = unary();
        for (;;) {
            if (accept('*'))
                lhs = make_binary(BinaryOp::mul, lhs, unary());
            else if (accept('/'))
                lhs = make_binary(BinaryOp::div, lhs, unary());
            else
                return lhs;
        }
    }

    NodePtr unary() {
        if (accept('-')) {
            auto n = std::make_shared<Node>();
            n->kind = NodeKind::negate;
            n->children = {unary()};
            return n;
        }
        return power();
    }

    NodePtr power() {
        NodePtr base = primary();
        if (accept('^')) return make_binary(BinaryOp::pow, base, unary());
        return base;
    }

    NodePtr number() {
        std::size_t start = pos_;
        auto digits = [&] {
            std::size_t d = 0;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                ++pos_;
                ++d;
            }
            return d;
        };
        std::size_t mantissa = digits();
        if (pos_ < text_.size() && text_[pos_] == '.') {
            ++pos_;
            mantissa += digits();
        }
        if (mantissa == 0) {
            pos_ = start;
            fail("number");
        }
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            std::size_t save = pos_;
            ++pos_;
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
            if (digits() == 0) pos_ = save;
        }
        std::string literal(text_.substr(start, pos_ - start));
        auto n = std::make_shared<Node>();
        n->kind = NodeKind::number;
        n->value = std::strtod(literal.c_str(), nullptr);
        if (!std::isfinite(n->value)) {
            pos_ = start;
            fail("finite number");
        }
        return n;
    }

    NodePtr primary() {
        skip_ws();
        if (pos_ >= text_.size()) fail("operand");
        char ch = text_[pos_];
        if (std::isdigit(static_cast<unsigned char>(ch)) || ch == '.') return number();
        if (ch == '(') {
            ++pos_;
            NodePtr inner = additive();
            expect(')');
            return inner;
        }
        if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') {
            std::size_t start = pos_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
                ++pos_;
            std::string id(text_.substr(start, pos_ - start));
            if (id == "if") return conditional(start);
            static const std::pair<const char*, Function> functions[] = {
                {"cos", Function::cos}, {"sin", Function::sin}, {"exp", Function::exp},
                {"sqrt", Function::sqrt}, {"abs", Function::abs}};
            for (const auto& [fname, f] : functions) {
                if (id == fname) {
                    expect('(');
                    auto n = std::make_shared<Node>();
                    n->kind = NodeKind::call;
                    n->fn = f;
                    n->children = {additive()};
                    expect(')');
                    return n;
                }
            }
            auto n = std::make_shared<Node>();
            if (id == "pi") {
                n->kind = NodeKind::pi;
                return n;
            }
            if (id == "z" || id == "t" || id == "eta0") {
                n->kind = NodeKind::symbol;
                n->name = id;
                return n;
            }
            pos_ = start;
            fail("one of z, t, pi, eta0 or a function cos/sin/exp/sqrt/abs/if");
        }
        fail("operand");
    }

    NodePtr conditional(std::size_t) {
        expect('(');
        NodePtr lhs = additive();
        skip_ws();
        Comparison cmp;
        if (accept('<'))
            cmp = (pos_ < text_.size() && text_[pos_] == '=') ? (++pos_, Comparison::le) : Comparison::lt;
        else if (accept('>'))
            cmp = (pos_ < text_.size() && text_[pos_] == '=') ? (++pos_, Comparison::ge) : Comparison::gt;
        else
            fail("comparison operator");
        NodePtr rhs = additive();
        expect(',');
        NodePtr then_branch = additive();
        expect(',');
        NodePtr else_branch = additive();
        expect(')');
        auto n = std::make_shared<Node>();
        n->kind = NodeKind::conditional;
        n->cmp = cmp;
        n->children = {lhs, rhs, then_branch, else_branch};
        return n;
    }
};

// Precedence levels used by the printer: additive 1, term 2, unary 3, power 4, primary 5.
inline int precedence(const Node& n) {
    switch (n.kind) {
        case NodeKind::binary:
            switch (n.op) {
                case BinaryOp::add:
                case BinaryOp::sub: return 1;
                case BinaryOp::mul:
                case BinaryOp::div: return 2;
                case BinaryOp::pow: return 4;
            }
            return 1;
        case NodeKind::negate: return 3;
        default: return 5;
    }
}

inline void print(const Node& n, int required, std::string& out) {
    bool parens = precedence(n) < required;
    if (parens) out += '(';
    switch (n.kind) {
        case NodeKind::number: out += format_number(n.value); break;
        case NodeKind::symbol: out += n.name; break;
        case NodeKind::pi: out += "pi"; break;
        case NodeKind::negate:
            out += '-';
            print(*n.children[0], 3, out);
            break;
        case NodeKind::binary: {
            int lp = 1, rp = 2;
            char sym = '+';
            switch (n.op) {
                case BinaryOp::add: sym = '+'; break;
                case BinaryOp::sub: sym = '-'; break;
                case BinaryOp::mul: sym = '*'; lp = 2; rp = 3; break;
                case BinaryOp::div: sym = '/'; lp = 2; rp = 3; break;
                case BinaryOp::pow: sym = '^'; lp = 5; rp = 3; break;
            }
            print(*n.children[0], lp, out);
            out += sym;
            print(*n.children[1], rp, out);
            break;
        }
        case NodeKind::call:
            out += function_name(n.fn);
            out += '(';
            print(*n.children[0], 1, out);
            out += ')';
            break;
        case NodeKind::conditional:
            out += "if(";
            print(*n.children[0], 1, out);
            out += comparison_text(n.cmp);
            print(*n.children[1], 1, out);
            out += ',';
            print(*n.children[2], 1, out);
            out += ',';
            print(*n.children[3], 1, out);
            out += ')';
            break;
    }
    if (parens) out += ')';
}

inline double checked(double v, const char* what) {
    if (!std::isfinite(v)) throw EvaluationError(std::string("non-finite result in ") + what);
    return v;
}

inline double eval(const Node& n, const Bindings& b) {
    switch (n.kind) {
        case NodeKind::number: return n.value;
        case NodeKind::pi: return std::numbers::pi;
        case NodeKind::symbol: {
            auto v = b.find(n.name);
            if (!v) throw EvaluationError("unbound symbol '" + n.name + "'");
            return *v;
        }
        case NodeKind::negate: return -eval(*n.children[0], b);
        case NodeKind::binary: {
            double x = eval(*n.children[0], b);
            double y = eval(*n.children[1], b);
            switch (n.op) {
                case BinaryOp::add: return checked(x + y, "addition");
                case BinaryOp::sub: return checked(x - y, "subtraction");
                case BinaryOp::mul: return checked(x * y, "multiplication");
                case BinaryOp::div:
                    if (y == 0.0) throw EvaluationError("division by zero");
                    return checked(x / y, "division");
                case BinaryOp::pow:
                    if (x < 0.0 && std::trunc(y) != y)
                        throw EvaluationError("negative base with non-integer exponent");
                    return checked(std::pow(x, y), "exponentiation");
            }
            return 0.0;
        }
        case NodeKind::call: {
            double x = eval(*n.children[0], b);
            switch (n.fn) {
                case Function::cos: return std::cos(x);
                case Function::sin: return std::sin(x);
                case Function::exp: return checked(std::exp(x), "exp");
                case Function::sqrt:
                    if (x < 0.0) throw EvaluationError("sqrt of negative number");
                    return std::sqrt(x);
                case Function::abs: return std::abs(x);
            }
            return 0.0;
        }
        case NodeKind::conditional: {
            double lhs = eval(*n.children[0], b);
            double rhs = eval(*n.children[1], b);
            bool holds = false;
            switch (n.cmp) {
                case Comparison::lt: holds = lhs < rhs; break;
                case Comparison::le: holds = lhs <= rhs; break;
                case Comparison::gt: holds = lhs > rhs; break;
                case Comparison::ge: holds = lhs >= rhs; break;
            }
            return eval(*n.children[holds ? 2 : 3], b);
        }
    }
    return 0.0;
}

inline void collect_symbols(const Node& n, std::set<std::string>& out) {
    if (n.kind == NodeKind::symbol) out.insert(n.name);
    for (const auto& c : n.children) collect_symbols(*c, out);
}

inline void collect_conditionals(const Node& n, std::vector<const Node*>& out) {
    if (n.kind == NodeKind::conditional) out.push_back(&n);
    for (const auto& c : n.children) collect_conditionals(*c, out);
}

}  // namespace detail

/// A parsed expression. Cheap to copy (shared immutable tree).
class Expr {
public:
    Expr() : Expr(constant(0.0)) {}

    static Expr parse(std::string_view text) {
        Expr e(detail::Parser(text).parse());
        e.source_ = std::string(text);
        return e;
    }

    static Expr constant(double v) {
        auto n = std::make_shared<Node>();
        n->value = v;
        Expr e(n);
        e.source_ = detail::format_number(v);
        return e;
    }

    double evaluate(const Bindings& bindings) const { return detail::eval(*root_, bindings); }

    double operator()(std::string_view var, double value, Bindings bindings = {}) const {
        bindings.set(var, value);
        return evaluate(bindings);
    }

    /// Canonical text; reparses to a structurally identical tree.
    std::string to_string() const {
        std::string out;
        detail::print(*root_, 1, out);
        return out;
    }

    /// The text this expression was parsed from (or the canonical text).
    const std::string& source() const { return source_; }

    std::set<std::string> symbols() const {
        std::set<std::string> out;
        detail::collect_symbols(*root_, out);
        return out;
    }

    const Node& root() const { return *root_; }

    friend bool operator==(const Expr& a, const Expr& b) {
        return structurally_equal(*a.root_, *b.root_);
    }

private:
    explicit Expr(NodePtr root) : root_(std::move(root)) {}
    NodePtr root_;
    std::string source_;
};

/// Evaluates `e` at each point with `variable` bound to it; order-preserving.
inline std::vector<double> sample(const Expr& e, std::string_view variable,
                                  std::span<const double> points, Bindings extra = {}) {
    std::vector<double> out;
    out.reserve(points.size());
    for (double p : points) {
        extra.set(variable, p);
        try {
            out.push_back(e.evaluate(extra));
        } catch (const EvaluationError& err) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.17g", p);
            throw EvaluationError(std::string(err.what()) + " at " + std::string(variable) + "=" + buf);
        }
    }
    return out;
}

struct JumpReport {
    double max_jump = 0.0;
    double location = 0.0;
    std::size_t thresholds = 0;
};

/// Locates every `if` switching point of `e` in [lo, hi] (sign changes of the
/// comparison on a fine sample, refined by bisection) and measures the jump of
/// the whole expression across each.
inline JumpReport max_jump(const Expr& e, std::string_view variable, double lo, double hi,
                           Bindings extra = {}, std::size_t samples = 10001) {
    JumpReport report;
    std::vector<const Node*> conds;
    detail::collect_conditionals(e.root(), conds);
    if (conds.empty() || samples < 2 || !(hi > lo)) return report;

    auto at = [&](double x) {
        extra.set(variable, x);
        return e.evaluate(extra);
    };
    const double delta = 1e-9 * (hi - lo);
    for (const Node* c : conds) {
        auto gap = [&](double x) {
            extra.set(variable, x);
            return detail::eval(*c->children[0], extra) - detail::eval(*c->children[1], extra);
        };
        double x0 = lo;
        double g0 = gap(x0);
        for (std::size_t j = 1; j < samples; ++j) {
            double x1 = lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(samples - 1);
            double g1 = gap(x1);
            if ((g0 <= 0.0) != (g1 <= 0.0)) {
                double a = x0, b = x1, ga = g0;
                for (int it = 0; it < 80 && b - a > 1e-15 * (hi - lo); ++it) {
                    double m = 0.5 * (a + b);
                    double gm = gap(m);
                    if ((gm <= 0.0) == (ga <= 0.0)) {
                        a = m;
                        ga = gm;
                    } else {
                        b = m;
                    }
                }
                double x = 0.5 * (a + b);
                double left = at(std::max(lo, x - delta));
                double right = at(std::min(hi, x + delta));
                double jump = std::abs(right - left);
                ++report.thresholds;
                if (jump > report.max_jump) {
                    report.max_jump = jump;
                    report.location = x;
                }
            }
            x0 = x1;
            g0 = g1;
        }
    }
    return report;
}

}  // namespace hyperlq::expr
