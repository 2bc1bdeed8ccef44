#include "tscv/problem.hpp"

#include <algorithm>
#include <cmath>

#include "tscv/error.hpp"
#include "tscv/format.hpp"

namespace tscv {
namespace {

const std::array<std::string, 4> kSlots = {"t", "y", "v", "z"};

Expression parse_with(std::string_view text, const Bindings& params, bool with_z) {
    return Expression::parse(text, allowed_names(params, with_z));
}

std::string where(double t) { return " at t = " + format_shortest(t); }

}  // namespace

std::set<std::string, std::less<>> allowed_names(const Bindings& params, bool with_z) {
    std::set<std::string, std::less<>> names = {"t", "y", "v"};
    if (with_z) names.insert("z");
    for (const auto& [name, value] : params) names.insert(name);
    return names;
}

Expression parse_integrand(std::string_view text, const Bindings& params) {
    return parse_with(text, params, true);
}

Expression parse_generator(std::string_view text, const Bindings& params) {
    return parse_with(text, params, false);
}

const char* to_string(Diagnostic::Kind kind) {
    switch (kind) {
        case Diagnostic::Kind::EndpointNotInScale: return "EndpointNotInScale";
        case Diagnostic::Kind::EndpointOrder: return "EndpointOrder";
        case Diagnostic::Kind::NoInteriorPoint: return "NoInteriorPoint";
        case Diagnostic::Kind::NoPointBeyondB: return "NoPointBeyondB";
        case Diagnostic::Kind::NoPointBeforeA: return "NoPointBeforeA";
        case Diagnostic::Kind::MissingGamma: return "MissingGamma";
        case Diagnostic::Kind::MissingConstraint: return "MissingConstraint";
        case Diagnostic::Kind::UnknownName: return "UnknownName";
        case Diagnostic::Kind::GeneratorUsesZ: return "GeneratorUsesZ";
    }
    return "Unknown";
}

std::vector<Diagnostic> validate(const ProblemSpec& spec) {
    using Kind = Diagnostic::Kind;
    std::vector<Diagnostic> out;
    const auto ia = spec.scale.find(spec.a);
    const auto ib = spec.scale.find(spec.b);
    if (!ia) out.push_back({Kind::EndpointNotInScale, "a = " + format_shortest(spec.a) + " is not a scale point"});
    if (!ib) out.push_back({Kind::EndpointNotInScale, "b = " + format_shortest(spec.b) + " is not a scale point"});
    if (ia && ib) {
        if (*ia >= *ib) {
            out.push_back({Kind::EndpointOrder, "a must be smaller than b"});
        } else {
            if (*ib - *ia < 2) out.push_back({Kind::NoInteriorPoint, "no scale point strictly between a and b"});
            if (spec.flavor == Flavor::delta && spec.right.is_free && *ib + 1 >= spec.scale.size()) {
                out.push_back({Kind::NoPointBeyondB,
                               "free right end in the delta flavor needs a scale point beyond b"});
            }
            if (spec.flavor == Flavor::nabla && spec.left.is_free && *ia == 0) {
                out.push_back({Kind::NoPointBeforeA,
                               "free left end in the nabla flavor needs a scale point before a"});
            }
        }
    }
    if (spec.constraint && !spec.gamma) {
        out.push_back({Kind::MissingGamma, "constraint integrand F is set but gamma is missing"});
    }
    if (!spec.constraint && spec.gamma) {
        out.push_back({Kind::MissingConstraint, "gamma is set but the constraint integrand F is missing"});
    }
    const auto check_names = [&](const Expression& e, const char* label, bool with_z) {
        const auto allowed = allowed_names(spec.params, true);
        for (const auto& name : e.names()) {
            if (!with_z && name == "z") {
                out.push_back({Kind::GeneratorUsesZ, std::string(label) + " may not depend on z"});
            } else if (!allowed.contains(name)) {
                out.push_back({Kind::UnknownName, std::string(label) + " uses unknown name '" + name + "'"});
            }
        }
    };
    check_names(spec.lagrangian, "L", true);
    check_names(spec.generator, "g", false);
    if (spec.constraint) check_names(*spec.constraint, "F", true);
    return out;
}

Problem::Problem(ProblemSpec spec) : spec_(std::move(spec)) {
    const auto diagnostics = validate(spec_);
    if (!diagnostics.empty()) {
        std::string message = "invalid problem:";
        for (const auto& d : diagnostics) message += std::string("\n  ") + to_string(d.kind) + ": " + d.message;
        throw Error(ErrorCode::ValidationError, message);
    }
    ia_ = spec_.scale.index_of(spec_.a);
    ib_ = spec_.scale.index_of(spec_.b);
    lagrangian_ = CompiledExpression(spec_.lagrangian, kSlots, spec_.params);
    generator_ = CompiledExpression(spec_.generator, kSlots, spec_.params);
    lagrangian_d_ = derivatives_of(spec_.lagrangian);
    generator_d_ = derivatives_of(spec_.generator);
    uses_z_[0] = spec_.lagrangian.references("z");
    if (spec_.constraint) {
        constraint_ = CompiledExpression(*spec_.constraint, kSlots, spec_.params);
        constraint_d_ = derivatives_of(*spec_.constraint);
        uses_z_[1] = spec_.constraint->references("z");
    }
}

std::array<Problem::Derivative, 3> Problem::derivatives_of(const Expression& e) const {
    std::array<Derivative, 3> out;
    for (int k = 0; k < 3; ++k) {
        out[k].slot = k + 1;
        if (auto d = e.symbolic_derivative(kSlots[k + 1])) {
            out[k].exact = CompiledExpression(*d, kSlots, spec_.params);
        }
    }
    return out;
}

Partials Problem::partials(const CompiledExpression& f, const std::array<Derivative, 3>& d,
                           const State& s) const {
    std::array<double, 3> result{};
    auto args = slots(s);
    for (std::size_t k = 0; k < 3; ++k) {
        if (d[k].exact) {
            result[k] = d[k].exact->eval(args);
            continue;
        }
        const auto slot = static_cast<std::size_t>(d[k].slot);
        const double x = args[slot];
        const double h = 1e-6 * std::max(1.0, std::abs(x));
        args[slot] = x + h;
        const double up = f.eval(args);
        args[slot] = x - h;
        const double down = f.eval(args);
        args[slot] = x;
        result[k] = (up - down) / (2 * h);
    }
    return {result[0], result[1], result[2]};
}

Partials Problem::constraint_partials(const State& s) const {
    if (!spec_.constraint) return {};
    return partials(constraint_, constraint_d_, s);
}

State Problem::state(const GridFunction& y, std::size_t i) const {
    const TimeScale& ts = scale();
    if (spec_.flavor == Flavor::delta) {
        const double next = y.at(i + 1);
        return {ts[i], next, (next - y.at(i)) / ts.mu(i), 0.0};
    }
    const double prev = y.at(i - 1);
    return {ts[i], prev, (y.at(i) - prev) / ts.nu(i), 0.0};
}

GridFunction accumulate_z(const Problem& problem, const GridFunction& y) {
    const TimeScale& ts = problem.scale();
    const std::size_t ia = problem.ia();
    if (!y.contains(ia)) throw Error(ErrorCode::TrajectoryDomainError, "trajectory does not contain a");
    const auto g_at = [&](std::size_t i) {
        try {
            return problem.generator(problem.state(y, i));
        } catch (const Error& e) {
            throw Error(e.code(), std::string(e.what()) + where(ts[i]));
        }
    };
    std::vector<double> z(y.size(), 0.0);
    const auto slot = [&](std::size_t i) -> double& { return z[i - y.first()]; };
    if (problem.flavor() == Flavor::delta) {
        for (std::size_t i = ia; i < y.last(); ++i) slot(i + 1) = slot(i) + ts.mu(i) * g_at(i);
        // Oriented integral for points left of a: z(t) = -sum over [t, a).
        for (std::size_t i = ia; i-- > y.first();) slot(i) = slot(i + 1) - ts.mu(i) * g_at(i);
    } else {
        for (std::size_t i = ia + 1; i <= y.last(); ++i) slot(i) = slot(i - 1) + ts.nu(i) * g_at(i);
        // z(t) = -sum over (t, a] for t left of a.
        for (std::size_t i = ia; i > y.first(); --i) slot(i - 1) = slot(i) - ts.nu(i) * g_at(i);
    }
    return GridFunction(ts, y.first(), std::move(z));
}

Trajectory::Trajectory(const Problem& problem, const GridFunction& y) : y_(problem.scale()), z_(problem.scale()) {
    const std::size_t lo = problem.first_index();
    const std::size_t hi = problem.last_index();
    if (!(y.scale() == problem.scale())) {
        throw Error(ErrorCode::TrajectoryDomainError, "trajectory lives on a different time scale");
    }
    if (!y.contains(lo) || !y.contains(hi)) {
        throw Error(ErrorCode::TrajectoryDomainError,
                    "trajectory must cover scale indices " + std::to_string(lo) + ".." + std::to_string(hi));
    }
    const auto& spec = problem.spec();
    if (!spec.left.is_free && y(problem.ia()) != spec.left.value) {
        throw Error(ErrorCode::TrajectoryDomainError, "y(a) differs from the prescribed boundary value");
    }
    if (!spec.right.is_free && y(problem.ib()) != spec.right.value) {
        throw Error(ErrorCode::TrajectoryDomainError, "y(b) differs from the prescribed boundary value");
    }
    std::vector<double> values(y.values().begin() + static_cast<std::ptrdiff_t>(lo - y.first()),
                               y.values().begin() + static_cast<std::ptrdiff_t>(hi - y.first() + 1));
    y_ = GridFunction(problem.scale(), lo, std::move(values));
    z_ = accumulate_z(problem, y_);
}

State Trajectory::state(const Problem& problem, std::size_t i) const {
    State s = problem.state(y_, i);
    s.z = z_.at(i);
    return s;
}

double trajectory_norm(const Problem& problem, const GridFunction& y) {
    double sup_shift = 0.0;
    double sup_slope = 0.0;
    const std::size_t lo = problem.flavor() == Flavor::delta ? problem.ia() : problem.ia() + 1;
    const std::size_t hi = problem.flavor() == Flavor::delta ? problem.ib() - 1 : problem.ib();
    for (std::size_t i = lo; i <= hi; ++i) {
        const State s = problem.state(y, i);
        sup_shift = std::max(sup_shift, std::abs(s.y));
        sup_slope = std::max(sup_slope, std::abs(s.v));
    }
    return sup_shift + sup_slope;
}

GridFunction initial_guess(const Problem& problem) {
    const auto& spec = problem.spec();
    const TimeScale& ts = problem.scale();
    const double ya = spec.left.is_free ? 0.0 : spec.left.value;
    const double yb = spec.right.is_free ? 0.0 : spec.right.value;
    const double ta = ts[problem.ia()];
    const double tb = ts[problem.ib()];
    return GridFunction::sample(ts, problem.first_index(), problem.last_index(), [&](double t) {
        if (t == ta) return ya;
        if (t == tb) return yb;
        return ya + (yb - ya) * (t - ta) / (tb - ta);
    });
}

}  // namespace tscv
