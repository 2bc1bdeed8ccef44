#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "tscv/expression.hpp"
#include "tscv/timescale.hpp"

namespace tscv {

/// Boundary data at one endpoint: a prescribed value or free.
struct Boundary {
    static Boundary fixed(double value) { return {false, value}; }
    static Boundary free() { return {true, 0.0}; }

    bool is_free = false;
    double value = 0.0;
};

enum class Sense { minimize, maximize };

/// User-facing description of a variational problem
///
///   extr  int_a^b L(t, y^s(t), y^d(t), z(t)) dt,   z(t) = int_a^t g(tau, y^s, y^d) dtau,
///   subject to  int_a^b F(t, y^s, y^d, z) dt = gamma  (optional)
///
/// where (s, d) = (sigma, Delta) for the delta flavor and (rho, nabla) for the
/// nabla flavor. L and F see the variables t, y, v, z; g sees t, y, v. Any other
/// name must be a parameter.
struct ProblemSpec {
    TimeScale scale;
    double a = 0.0;
    double b = 0.0;
    Flavor flavor = Flavor::delta;
    Expression lagrangian;
    Expression generator;
    std::optional<Expression> constraint;
    std::optional<double> gamma;
    Boundary left;
    Boundary right;
    Bindings params;
    Sense sense = Sense::minimize;
};

/// Names an expression may use: t, y, v, (z), plus the parameter names.
std::set<std::string, std::less<>> allowed_names(const Bindings& params, bool with_z);

/// Parses an L or F expression (variables t, y, v, z).
Expression parse_integrand(std::string_view text, const Bindings& params);
/// Parses a g expression (variables t, y, v).
Expression parse_generator(std::string_view text, const Bindings& params);

struct Diagnostic {
    enum class Kind {
        EndpointNotInScale,
        EndpointOrder,
        NoInteriorPoint,
        NoPointBeyondB,
        NoPointBeforeA,
        MissingGamma,
        MissingConstraint,
        UnknownName,
        GeneratorUsesZ,
    };
    Kind kind;
    std::string message;
};

const char* to_string(Diagnostic::Kind kind);

/// Structural checks; empty result iff every ProblemSpec invariant holds.
std::vector<Diagnostic> validate(const ProblemSpec& spec);

/// Integrand arguments at one point: (t, y^s(t), y^d(t), z(t)).
struct State {
    double t;
    double y;
    double v;
    double z;
};

/// Partial derivatives with respect to the y, v and z arguments.
struct Partials {
    double y = 0.0;
    double v = 0.0;
    double z = 0.0;
};

/// A validated ProblemSpec with its expressions compiled for evaluation.
///
/// Index conventions: `ia`, `ib` are the scale indices of a and b. When the
/// delta problem has a free right end (resp. the nabla problem a free left
/// end) the trajectory carries one extra point sigma(b) (resp. rho(a)); the
/// functional does not depend on it, but the natural boundary condition does.
class Problem {
public:
    /// Throws ValidationError carrying every diagnostic.
    explicit Problem(ProblemSpec spec);

    const ProblemSpec& spec() const noexcept { return spec_; }
    const TimeScale& scale() const noexcept { return spec_.scale; }
    Flavor flavor() const noexcept { return spec_.flavor; }
    std::size_t ia() const noexcept { return ia_; }
    std::size_t ib() const noexcept { return ib_; }
    bool has_constraint() const noexcept { return spec_.constraint.has_value(); }

    bool extra_right() const noexcept { return spec_.flavor == Flavor::delta && spec_.right.is_free; }
    bool extra_left() const noexcept { return spec_.flavor == Flavor::nabla && spec_.left.is_free; }

    /// Index range a trajectory must cover.
    std::size_t first_index() const noexcept { return ia_ - (extra_left() ? 1 : 0); }
    std::size_t last_index() const noexcept { return ib_ + (extra_right() ? 1 : 0); }

    /// Indices whose terms make up the functionals: [a, b) for delta, (a, b] for nabla.
    std::size_t term_first() const noexcept { return spec_.flavor == Flavor::delta ? ia_ : ia_ + 1; }
    std::size_t term_last() const noexcept { return spec_.flavor == Flavor::delta ? ib_ - 1 : ib_; }

    /// Indices where the integrand state can be formed: the term range plus the
    /// endpoint adjacent to the extra point, if any.
    std::size_t state_first() const noexcept { return extra_left() ? ia_ : term_first(); }
    std::size_t state_last() const noexcept { return extra_right() ? ib_ : term_last(); }

    /// Shifted value and derivative of y at index i (z left at 0).
    State state(const GridFunction& y, std::size_t i) const;

    double lagrangian(const State& s) const { return lagrangian_.eval(slots(s)); }
    double constraint(const State& s) const { return constraint_.eval(slots(s)); }
    double generator(const State& s) const { return generator_.eval(slots(s)); }

    Partials lagrangian_partials(const State& s) const { return partials(lagrangian_, lagrangian_d_, s); }
    Partials constraint_partials(const State& s) const;
    Partials generator_partials(const State& s) const { return partials(generator_, generator_d_, s); }

    bool lagrangian_uses_z() const noexcept { return uses_z_[0]; }
    bool constraint_uses_z() const noexcept { return uses_z_[1]; }

private:
    struct Derivative {
        std::optional<CompiledExpression> exact;
        int slot = 0;
    };

    static std::array<double, 4> slots(const State& s) { return {s.t, s.y, s.v, s.z}; }
    Partials partials(const CompiledExpression& f, const std::array<Derivative, 3>& d, const State& s) const;
    std::array<Derivative, 3> derivatives_of(const Expression& e) const;

    ProblemSpec spec_;
    std::size_t ia_ = 0;
    std::size_t ib_ = 0;
    CompiledExpression lagrangian_;
    CompiledExpression generator_;
    CompiledExpression constraint_;
    std::array<Derivative, 3> lagrangian_d_;
    std::array<Derivative, 3> generator_d_;
    std::array<Derivative, 3> constraint_d_;
    std::array<bool, 2> uses_z_{};
};

/// y on the problem's index range together with its running integral z.
class Trajectory {
public:
    /// Restricts `y` to [first_index, last_index] and accumulates z. Throws
    /// TrajectoryDomainError if `y` does not cover that range or a fixed
    /// boundary value differs from the prescribed one.
    Trajectory(const Problem& problem, const GridFunction& y);

    const GridFunction& y() const noexcept { return y_; }
    const GridFunction& z() const noexcept { return z_; }

    /// Integrand state at index i, including z(i).
    State state(const Problem& problem, std::size_t i) const;

private:
    GridFunction y_;
    GridFunction z_;
};

/// Running integral of g along y:
///   delta: z(t) = sum over [a, t) of mu * g(tau, y(sigma tau), y^Delta(tau)),
///   nabla: z(t) = sum over (a, t] of nu * g(tau, y(rho tau), y^nabla(tau)).
/// Defined on the whole domain of y that the recursion reaches; z(a) = 0.
GridFunction accumulate_z(const Problem& problem, const GridFunction& y);

/// sup |y^s| + sup |y^d| over [a, b]^kappa (delta) or [a, b]_kappa (nabla).
double trajectory_norm(const Problem& problem, const GridFunction& y);

/// Linear interpolation between the boundary values (0 on a free side) on the
/// problem's index range; the extra point, if any, continues the line.
GridFunction initial_guess(const Problem& problem);

}  // namespace tscv
