#include "tscv/duality.hpp"

#include <algorithm>
#include <cmath>

#include "tscv/error.hpp"

namespace tscv {

namespace {

using Replacements = std::map<std::string, Expression, std::less<>>;

// Coefficient of z in e, when e is affine in z with a t-only coefficient.
std::optional<Expression> z_coefficient(const Expression& e) {
    if (!e.references("z")) return Expression::constant(0.0);
    auto k = e.symbolic_derivative("z");
    if (!k || k->references("y") || k->references("v") || k->references("z")) return std::nullopt;
    return k;
}

double integral_of(const Expression& k, const ProblemSpec& spec) {
    const TimeScale& ts = spec.scale;
    const std::size_t ia = ts.index_of(spec.a);
    const std::size_t ib = ts.index_of(spec.b);
    Bindings b = spec.params;
    double sum = 0.0;
    for (std::size_t i = ia; i < ib; ++i) {
        const std::size_t at = spec.flavor == Flavor::delta ? i : i + 1;
        b.insert_or_assign("t", ts[at]);
        sum += ts.grain(at, spec.flavor) * k.eval(b);
    }
    return sum;
}

Expression reflect_integrand(const Expression& e, const Expression& g_star, const ProblemSpec& spec,
                             const char* what) {
    const Replacements flip{{"t", -Expression::variable("t")}, {"v", -Expression::variable("v")}};
    const auto k = z_coefficient(e);
    if (!k) {
        throw Error(ErrorCode::NotDualizable,
                    std::string(what) + " must be affine in z with a coefficient depending on t only");
    }
    if (!e.references("z")) return e.substitute(flip);
    const Expression base = e.substitute({{"z", Expression::constant(0.0)}}).substitute(flip);
    const double big_k = integral_of(*k, spec);
    return base + Expression::constant(big_k) * g_star - k->substitute(flip) * Expression::variable("z");
}

}  // namespace

TimeScale dualize_scale(const TimeScale& scale) {
    std::vector<double> pts(scale.points().rbegin(), scale.points().rend());
    for (double& p : pts) p = -p;
    return TimeScale::from_points(std::move(pts));
}

ProblemSpec dualize_problem(const ProblemSpec& spec) {
    const Replacements flip{{"t", -Expression::variable("t")}, {"v", -Expression::variable("v")}};
    const Expression g_star = spec.generator.substitute(flip);
    ProblemSpec out{
        .scale = dualize_scale(spec.scale),
        .a = -spec.b,
        .b = -spec.a,
        .flavor = spec.flavor == Flavor::delta ? Flavor::nabla : Flavor::delta,
        .lagrangian = reflect_integrand(spec.lagrangian, g_star, spec, "L"),
        .generator = g_star,
        .constraint = std::nullopt,
        .gamma = spec.gamma,
        .left = spec.right,
        .right = spec.left,
        .params = spec.params,
        .sense = spec.sense,
    };
    if (spec.constraint) out.constraint = reflect_integrand(*spec.constraint, g_star, spec, "F");
    return out;
}

DualPair make_dual_pair(const ProblemSpec& primal) {
    if (primal.flavor != Flavor::delta) throw Error(ErrorCode::FlavorMismatch, "primal problem must be delta-flavored");
    return DualPair{primal, dualize_problem(primal)};
}

GridFunction reflect(const GridFunction& y, const TimeScale& reflected) {
    if (reflected.size() != y.scale().size()) throw Error(ErrorCode::ScaleMismatch, "scales differ in size");
    if (y.empty()) return GridFunction(reflected);
    const std::size_t n = reflected.size();
    std::vector<double> values(y.values().rbegin(), y.values().rend());
    return GridFunction(reflected, n - 1 - y.last(), std::move(values));
}

double duality_check(const DualPair& pair, const GridFunction& y, Multipliers m) {
    if (pair.primal.flavor != Flavor::delta || pair.dual.flavor != Flavor::nabla) {
        throw Error(ErrorCode::FlavorMismatch, "duality_check expects a delta primal and a nabla dual");
    }
    if (!(pair.dual.scale == dualize_scale(pair.primal.scale))) {
        throw Error(ErrorCode::ScaleMismatch, "dual scale is not the reflection of the primal scale");
    }
    const Problem primal(pair.primal);
    const Problem dual(pair.dual);
    const Trajectory yp(primal, y);
    const Trajectory yd(dual, reflect(yp.y(), dual.scale()));
    const ResidualReport r = el_residual(primal, yp, m);
    const ResidualReport rd = el_residual(dual, yd, m);

    const std::size_t n = primal.scale().size();
    double diff = 0.0;
    double scale = 0.0;
    if (!r.pointwise.empty()) {
        for (std::size_t i = r.pointwise.first(); i <= r.pointwise.last(); ++i) {
            const std::size_t j = n - 1 - i;
            if (!rd.pointwise.contains(j)) throw Error(ErrorCode::ScaleMismatch, "residual domains do not match");
            diff = std::max(diff, std::abs(r.pointwise(i) - rd.pointwise(j)));
            scale = std::max(scale, std::abs(r.pointwise(i)));
        }
    }
    if (r.pointwise.size() != rd.pointwise.size()) throw Error(ErrorCode::ScaleMismatch, "residual domains do not match");
    const auto boundary = [&](const std::optional<double>& p, const std::optional<double>& d) {
        if (p.has_value() != d.has_value()) throw Error(ErrorCode::ScaleMismatch, "free endpoints do not match");
        if (p) {
            diff = std::max(diff, std::abs(*p + *d));
            scale = std::max(scale, std::abs(*p));
        }
    };
    boundary(r.boundary_left, rd.boundary_right);
    boundary(r.boundary_right, rd.boundary_left);
    return diff / (1.0 + scale);
}

}  // namespace tscv
