#include "tscv/expression.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <functional>

#include "tscv/error.hpp"
#include "tscv/format.hpp"

namespace tscv {
namespace {

using Op = Expression::Op;
using Node = Expression::Node;
using NodePtr = Expression::NodePtr;

bool is_unary_fn(Op op) {
    return op == Op::neg || op == Op::sin || op == Op::cos || op == Op::exp || op == Op::log ||
           op == Op::sqrt || op == Op::abs;
}

const char* function_name(Op op) {
    switch (op) {
        case Op::sin: return "sin";
        case Op::cos: return "cos";
        case Op::exp: return "exp";
        case Op::log: return "log";
        case Op::sqrt: return "sqrt";
        case Op::abs: return "abs";
        default: return nullptr;
    }
}

std::optional<Op> function_op(std::string_view name) {
    if (name == "sin") return Op::sin;
    if (name == "cos") return Op::cos;
    if (name == "exp") return Op::exp;
    if (name == "log") return Op::log;
    if (name == "sqrt") return Op::sqrt;
    if (name == "abs") return Op::abs;
    return std::nullopt;
}

[[noreturn]] void domain_error(const std::string& what) {
    throw Error(ErrorCode::DomainError, "domain error: " + what);
}

double checked(double r, const char* what) {
    if (!std::isfinite(r)) domain_error(std::string(what) + " produced a non-finite value");
    return r;
}

double apply_unary(Op op, double x) {
    switch (op) {
        case Op::neg: return -x;
        case Op::sin: return std::sin(x);
        case Op::cos: return std::cos(x);
        case Op::exp: return checked(std::exp(x), "exp");
        case Op::log:
            if (!(x > 0)) domain_error("log of non-positive value " + format_shortest(x));
            return std::log(x);
        case Op::sqrt:
            if (x < 0) domain_error("sqrt of negative value " + format_shortest(x));
            return std::sqrt(x);
        case Op::abs: return std::abs(x);
        default: return x;
    }
}

double apply_binary(Op op, double a, double b) {
    switch (op) {
        case Op::add: return checked(a + b, "+");
        case Op::sub: return checked(a - b, "-");
        case Op::mul: return checked(a * b, "*");
        case Op::div:
            if (b == 0) domain_error("division by zero");
            return checked(a / b, "/");
        case Op::pow:
            if (a < 0 && b != std::trunc(b)) {
                domain_error("negative base " + format_shortest(a) + " with non-integer exponent");
            }
            if (a == 0 && b < 0) domain_error("zero base with negative exponent");
            return checked(std::pow(a, b), "^");
        default: return 0.0;
    }
}

NodePtr make_node(Op op, NodePtr lhs = nullptr, NodePtr rhs = nullptr) {
    return std::make_shared<const Node>(Node{op, 0.0, {}, std::move(lhs), std::move(rhs)});
}

NodePtr make_constant(double v) {
    return std::make_shared<const Node>(Node{Op::constant, v, {}, nullptr, nullptr});
}

NodePtr make_variable(std::string name) {
    return std::make_shared<const Node>(Node{Op::variable, 0.0, std::move(name), nullptr, nullptr});
}

bool is_const(const NodePtr& n, double v) { return n->op == Op::constant && n->value == v; }

// Builders used for generated trees (derivatives, substitutions, operators).
// They fold constants where the result stays finite.
NodePtr build_neg(NodePtr a) {
    if (a->op == Op::constant) return make_constant(-a->value);
    if (a->op == Op::neg) return a->lhs;
    return make_node(Op::neg, std::move(a));
}

NodePtr build_binary(Op op, NodePtr a, NodePtr b) {
    if (a->op == Op::constant && b->op == Op::constant) {
        try {
            return make_constant(apply_binary(op, a->value, b->value));
        } catch (const Error&) {
            return make_node(op, std::move(a), std::move(b));
        }
    }
    // Sign moves below are exact in IEEE arithmetic.
    const auto negative = [](const NodePtr& n) {
        return n->op == Op::neg || (n->op == Op::constant && n->value < 0) ||
               (n->op == Op::mul && n->lhs->op == Op::constant && n->lhs->value < 0);
    };
    const auto flip = [](const NodePtr& n) -> NodePtr {
        if (n->op == Op::neg) return n->lhs;
        if (n->op == Op::constant) return make_constant(-n->value);
        return build_binary(Op::mul, make_constant(-n->lhs->value), n->rhs);
    };
    switch (op) {
        case Op::add:
            if (is_const(a, 0)) return b;
            if (is_const(b, 0)) return a;
            if (negative(b)) return build_binary(Op::sub, std::move(a), flip(b));
            break;
        case Op::sub:
            if (is_const(b, 0)) return a;
            if (is_const(a, 0)) return build_neg(std::move(b));
            if (negative(b)) return build_binary(Op::add, std::move(a), flip(b));
            break;
        case Op::mul:
            if (is_const(a, 0) || is_const(b, 0)) return make_constant(0.0);
            if (is_const(a, 1)) return b;
            if (is_const(b, 1)) return a;
            if (is_const(a, -1)) return build_neg(std::move(b));
            if (is_const(b, -1)) return build_neg(std::move(a));
            if (a->op == Op::neg && b->op == Op::neg) return build_binary(Op::mul, a->lhs, b->lhs);
            if (b->op == Op::neg) {
                if (a->op == Op::constant) return build_binary(Op::mul, make_constant(-a->value), b->lhs);
                return build_neg(build_binary(Op::mul, std::move(a), b->lhs));
            }
            if (a->op == Op::neg) return build_neg(build_binary(Op::mul, a->lhs, std::move(b)));
            break;
        case Op::div:
            if (is_const(b, 1)) return a;
            if (a->op == Op::neg && b->op == Op::neg) return build_binary(Op::div, a->lhs, b->lhs);
            if (a->op == Op::neg) return build_neg(build_binary(Op::div, a->lhs, std::move(b)));
            if (b->op == Op::neg) return build_neg(build_binary(Op::div, std::move(a), b->lhs));
            break;
        case Op::pow:
            if (is_const(b, 1)) return a;
            if (is_const(b, 0)) return make_constant(1.0);
            if (a->op == Op::neg && b->op == Op::constant && b->value == std::trunc(b->value) &&
                std::abs(b->value) < 1e15) {
                const bool even = std::fmod(std::abs(b->value), 2.0) == 0.0;
                NodePtr p = build_binary(Op::pow, a->lhs, std::move(b));
                return even ? p : build_neg(p);
            }
            break;
        default: break;
    }
    return make_node(op, std::move(a), std::move(b));
}

bool node_references(const Node& n, std::string_view name) {
    if (n.op == Op::variable) return n.name == name;
    if (n.lhs && node_references(*n.lhs, name)) return true;
    return n.rhs && node_references(*n.rhs, name);
}

// --- parser -----------------------------------------------------------------

class Parser {
public:
    Parser(std::string_view text, const std::set<std::string, std::less<>>& allowed)
        : text_(text), allowed_(allowed) {}

    NodePtr parse() {
        skip_ws();
        if (pos_ >= text_.size()) throw SyntaxError(pos_, "empty expression");
        NodePtr e = expr();
        skip_ws();
        if (pos_ < text_.size()) {
            throw SyntaxError(pos_, std::string("unexpected '") + text_[pos_] + "'");
        }
        return e;
    }

private:
    void skip_ws() {
        while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n' ||
                                       text_[pos_] == '\r')) {
            ++pos_;
        }
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    NodePtr expr() {
        NodePtr lhs = term();
        for (;;) {
            if (accept('+')) {
                lhs = make_node(Op::add, lhs, term());
            } else if (accept('-')) {
                lhs = make_node(Op::sub, lhs, term());
            } else {
                return lhs;
            }
        }
    }

    NodePtr term() {
        NodePtr lhs = unary();
        for (;;) {
            if (accept('*')) {
                lhs = make_node(Op::mul, lhs, unary());
            } else if (accept('/')) {
                lhs = make_node(Op::div, lhs, unary());
            } else {
                return lhs;
            }
        }
    }

    NodePtr unary() {
        if (accept('-')) return make_node(Op::neg, unary());
        return power();
    }

    NodePtr power() {
        NodePtr base = primary();
        if (accept('^')) return make_node(Op::pow, base, unary());
        return base;
    }

    NodePtr primary() {
        skip_ws();
        if (pos_ >= text_.size()) throw SyntaxError(pos_, "unexpected end of input");
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            NodePtr inner = expr();
            if (!accept(')')) throw SyntaxError(pos_, "expected ')'");
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return name();
        throw SyntaxError(pos_, std::string("unexpected '") + c + "'");
    }

    NodePtr number() {
        const std::size_t start = pos_;
        auto digits = [&] {
            const std::size_t from = pos_;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
            return pos_ > from;
        };
        bool any = digits();
        if (pos_ < text_.size() && text_[pos_] == '.') {
            ++pos_;
            any = digits() || any;
        }
        if (!any) throw SyntaxError(start, "malformed number");
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            ++pos_;
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
            if (!digits()) throw SyntaxError(pos_, "malformed exponent");
        }
        double value = 0.0;
        const auto res = std::from_chars(text_.data() + start, text_.data() + pos_, value);
        if (res.ec != std::errc{} || !std::isfinite(value)) throw SyntaxError(start, "number out of range");
        return make_constant(value);
    }

    NodePtr name() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
            ++pos_;
        }
        const std::string_view id = text_.substr(start, pos_ - start);
        if (auto fn = function_op(id)) {
            if (!accept('(')) throw SyntaxError(pos_, "expected '(' after function '" + std::string(id) + "'");
            NodePtr arg = expr();
            if (!accept(')')) throw SyntaxError(pos_, "expected ')'");
            return make_node(*fn, arg);
        }
        if (allowed_.find(id) == allowed_.end()) {
            throw Error(ErrorCode::UnknownIdentifier, "unknown identifier '" + std::string(id) + "'");
        }
        return make_variable(std::string(id));
    }

    std::string_view text_;
    const std::set<std::string, std::less<>>& allowed_;
    std::size_t pos_ = 0;
};

// --- evaluation, printing, transformation -------------------------------------

double eval_node(const Node& n, const Bindings& b) {
    switch (n.op) {
        case Op::constant: return n.value;
        case Op::variable: {
            auto it = b.find(n.name);
            if (it == b.end()) throw Error(ErrorCode::UnboundVariable, "unbound variable '" + n.name + "'");
            return it->second;
        }
        default: break;
    }
    if (is_unary_fn(n.op)) return apply_unary(n.op, eval_node(*n.lhs, b));
    return apply_binary(n.op, eval_node(*n.lhs, b), eval_node(*n.rhs, b));
}

int precedence(const Node& n) {
    switch (n.op) {
        case Op::add:
        case Op::sub: return 1;
        case Op::mul:
        case Op::div: return 2;
        case Op::neg: return 3;
        case Op::pow: return 4;
        case Op::constant: return n.value < 0 || std::signbit(n.value) ? 3 : 5;
        default: return 5;
    }
}

void print_node(const Node& n, std::string& out) {
    auto wrapped = [&out](const Node& child, bool parens) {
        if (parens) out += '(';
        print_node(child, out);
        if (parens) out += ')';
    };
    switch (n.op) {
        case Op::constant: out += format_shortest(n.value); return;
        case Op::variable: out += n.name; return;
        case Op::neg:
            out += '-';
            wrapped(*n.lhs, precedence(*n.lhs) < 3);
            return;
        default: break;
    }
    if (const char* fn = function_name(n.op)) {
        out += fn;
        wrapped(*n.lhs, true);
        return;
    }
    const int p = precedence(n);
    if (n.op == Op::pow) {
        wrapped(*n.lhs, precedence(*n.lhs) <= 4);
        out += '^';
        wrapped(*n.rhs, precedence(*n.rhs) < 3);
        return;
    }
    wrapped(*n.lhs, precedence(*n.lhs) < p);
    switch (n.op) {
        case Op::add: out += " + "; break;
        case Op::sub: out += " - "; break;
        case Op::mul: out += '*'; break;
        default: out += '/'; break;
    }
    wrapped(*n.rhs, precedence(*n.rhs) <= p);
}

std::optional<NodePtr> derive(const NodePtr& n, std::string_view var) {
    if (!node_references(*n, var)) return make_constant(0.0);
    switch (n->op) {
        case Op::variable: return make_constant(1.0);
        case Op::neg: {
            auto d = derive(n->lhs, var);
            if (!d) return std::nullopt;
            return build_neg(*d);
        }
        case Op::add:
        case Op::sub: {
            auto da = derive(n->lhs, var);
            auto db = derive(n->rhs, var);
            if (!da || !db) return std::nullopt;
            return build_binary(n->op, *da, *db);
        }
        case Op::mul: {
            auto da = derive(n->lhs, var);
            auto db = derive(n->rhs, var);
            if (!da || !db) return std::nullopt;
            return build_binary(Op::add, build_binary(Op::mul, *da, n->rhs), build_binary(Op::mul, n->lhs, *db));
        }
        case Op::div: {
            if (node_references(*n->rhs, var)) return std::nullopt;
            auto da = derive(n->lhs, var);
            if (!da) return std::nullopt;
            return build_binary(Op::div, *da, n->rhs);
        }
        case Op::pow: {
            if (node_references(*n->rhs, var)) return std::nullopt;
            auto da = derive(n->lhs, var);
            if (!da) return std::nullopt;
            NodePtr reduced = build_binary(Op::sub, n->rhs, make_constant(1.0));
            NodePtr outer = build_binary(Op::mul, n->rhs, build_binary(Op::pow, n->lhs, reduced));
            return build_binary(Op::mul, outer, *da);
        }
        default: return std::nullopt;
    }
}

NodePtr substitute_node(const NodePtr& n, const std::map<std::string, Expression, std::less<>>& repl) {
    if (n->op == Op::constant) return n;
    if (n->op == Op::variable) {
        auto it = repl.find(n->name);
        return it == repl.end() ? n : std::make_shared<const Node>(it->second.root());
    }
    if (is_unary_fn(n->op)) {
        NodePtr a = substitute_node(n->lhs, repl);
        return n->op == Op::neg ? build_neg(a) : make_node(n->op, a);
    }
    return build_binary(n->op, substitute_node(n->lhs, repl), substitute_node(n->rhs, repl));
}

void collect_names(const Node& n, std::set<std::string, std::less<>>& out) {
    if (n.op == Op::variable) out.insert(n.name);
    if (n.lhs) collect_names(*n.lhs, out);
    if (n.rhs) collect_names(*n.rhs, out);
}

}  // namespace

Expression::Expression() : root_(make_constant(0.0)) {}

Expression Expression::parse(std::string_view text, const std::set<std::string, std::less<>>& allowed) {
    return Expression(Parser(text, allowed).parse());
}

Expression Expression::constant(double value) { return Expression(make_constant(value)); }

Expression Expression::variable(std::string name) { return Expression(make_variable(std::move(name))); }

double Expression::eval(const Bindings& bindings) const { return eval_node(*root_, bindings); }

std::optional<Expression> Expression::symbolic_derivative(std::string_view var) const {
    auto d = derive(root_, var);
    if (!d) return std::nullopt;
    return Expression(*d);
}

double Expression::partial(std::string_view var, const Bindings& bindings, double step) const {
    auto it = bindings.find(var);
    if (it == bindings.end()) {
        throw Error(ErrorCode::UnboundVariable, "unbound variable '" + std::string(var) + "'");
    }
    if (auto d = symbolic_derivative(var)) return d->eval(bindings);
    const double x = it->second;
    const double s = step * std::max(1.0, std::abs(x));
    Bindings shifted = bindings;
    auto slot = shifted.find(var);
    slot->second = x + s;
    const double up = eval(shifted);
    slot->second = x - s;
    const double down = eval(shifted);
    return (up - down) / (2 * s);
}

bool Expression::references(std::string_view name) const { return node_references(*root_, name); }

std::set<std::string, std::less<>> Expression::names() const {
    std::set<std::string, std::less<>> out;
    collect_names(*root_, out);
    return out;
}

Expression Expression::substitute(const std::map<std::string, Expression, std::less<>>& replacements) const {
    return Expression(substitute_node(root_, replacements));
}

std::string Expression::to_string() const {
    std::string out;
    print_node(*root_, out);
    return out;
}

Expression operator+(const Expression& a, const Expression& b) {
    return Expression(build_binary(Op::add, a.root_, b.root_));
}

Expression operator-(const Expression& a, const Expression& b) {
    return Expression(build_binary(Op::sub, a.root_, b.root_));
}

Expression operator*(const Expression& a, const Expression& b) {
    return Expression(build_binary(Op::mul, a.root_, b.root_));
}

Expression operator-(const Expression& a) { return Expression(build_neg(a.root_)); }

// --- compiled form -------------------------------------------------------------

CompiledExpression::CompiledExpression(const Expression& expr, std::span<const std::string> slots,
                                       const Bindings& params) {
    std::size_t depth = 0;
    std::function<void(const Node&)> emit = [&](const Node& n) {
        if (n.op == Op::constant || n.op == Op::variable) {
            Instr ins{Op::constant, n.value, -1};
            if (n.op == Op::variable) {
                auto pos = std::find(slots.begin(), slots.end(), n.name);
                if (pos != slots.end()) {
                    ins = Instr{Op::variable, 0.0, static_cast<int>(pos - slots.begin())};
                } else if (auto it = params.find(n.name); it != params.end()) {
                    ins.value = it->second;
                } else {
                    throw Error(ErrorCode::UnboundVariable, "unbound variable '" + n.name + "'");
                }
            }
            code_.push_back(ins);
            max_depth_ = std::max(max_depth_, ++depth);
            return;
        }
        emit(*n.lhs);
        if (n.rhs) {
            emit(*n.rhs);
            --depth;
        }
        code_.push_back(Instr{n.op, 0.0, -1});
    };
    emit(*expr.root_);
}

double CompiledExpression::eval(std::span<const double> slots) const {
    std::array<double, 32> small{};
    std::vector<double> large;
    double* stack = small.data();
    if (max_depth_ > small.size()) {
        large.resize(max_depth_);
        stack = large.data();
    }
    std::size_t top = 0;
    for (const Instr& ins : code_) {
        switch (ins.op) {
            case Op::constant: stack[top++] = ins.value; break;
            case Op::variable: stack[top++] = slots[static_cast<std::size_t>(ins.slot)]; break;
            case Op::add:
            case Op::sub:
            case Op::mul:
            case Op::div:
            case Op::pow:
                --top;
                stack[top - 1] = apply_binary(ins.op, stack[top - 1], stack[top]);
                break;
            default: stack[top - 1] = apply_unary(ins.op, stack[top - 1]); break;
        }
    }
    return stack[0];
}

}  // namespace tscv
