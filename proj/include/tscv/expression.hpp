#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tscv {

using Bindings = std::map<std::string, double, std::less<>>;

/// Grammar of expression text:
///
///   expr    = term { ("+" | "-") term } ;
///   term    = unary { ("*" | "/") unary } ;
///   unary   = "-" unary | power ;
///   power   = primary [ "^" unary ] ;            (right associative)
///   primary = number | name | func "(" expr ")" | "(" expr ")" ;
///   func    = "sin" | "cos" | "exp" | "log" | "sqrt" | "abs" ;
///   number  = digits [ "." digits ] [ ("e" | "E") [ "+" | "-" ] digits ] ;
///
/// Whitespace is insignificant. Names must belong to the allowed set passed to
/// parse(); function names are reserved.
class Expression {
public:
    enum class Op { constant, variable, neg, sin, cos, exp, log, sqrt, abs, add, sub, mul, div, pow };

    struct Node {
        Op op;
        double value = 0.0;
        std::string name;
        std::shared_ptr<const Node> lhs;
        std::shared_ptr<const Node> rhs;
    };
    using NodePtr = std::shared_ptr<const Node>;

    /// The constant 0.
    Expression();

    static Expression parse(std::string_view text, const std::set<std::string, std::less<>>& allowed);
    static Expression constant(double value);
    static Expression variable(std::string name);

    /// IEEE double evaluation. Throws UnboundVariable or DomainError.
    double eval(const Bindings& bindings) const;

    /// d/d`var` at `bindings`. Uses the exact derivative when the expression is
    /// polynomial in `var`, otherwise a central difference with step
    /// step * max(1, |x|).
    double partial(std::string_view var, const Bindings& bindings, double step = 1e-6) const;

    /// Exact derivative, available when `var` occurs only under + - * unary minus,
    /// division by a `var`-free denominator, and powers with a `var`-free exponent.
    std::optional<Expression> symbolic_derivative(std::string_view var) const;

    bool references(std::string_view name) const;
    std::set<std::string, std::less<>> names() const;

    /// Replaces variables by expressions simultaneously.
    Expression substitute(const std::map<std::string, Expression, std::less<>>& replacements) const;

    /// Canonical text; parse(to_string()) reproduces an identical tree.
    std::string to_string() const;

    const Node& root() const noexcept { return *root_; }

    friend Expression operator+(const Expression& a, const Expression& b);
    friend Expression operator-(const Expression& a, const Expression& b);
    friend Expression operator*(const Expression& a, const Expression& b);
    friend Expression operator-(const Expression& a);

private:
    explicit Expression(NodePtr root) : root_(std::move(root)) {}

    NodePtr root_;

    friend class CompiledExpression;
};

/// Flat postfix form of an Expression for repeated evaluation with a fixed
/// variable layout. Parameters are folded in as constants at compile time.
class CompiledExpression {
public:
    CompiledExpression() = default;
    /// `slots` names the variables in the order eval() receives them; every
    /// other name must be bound by `params`.
    CompiledExpression(const Expression& expr, std::span<const std::string> slots, const Bindings& params);

    double eval(std::span<const double> slots) const;

private:
    struct Instr {
        Expression::Op op;
        double value;
        int slot;
    };
    std::vector<Instr> code_;
    std::size_t max_depth_ = 0;
};

}  // namespace tscv
