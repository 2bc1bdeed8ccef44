#include "tscv/euler_lagrange.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "tscv/error.hpp"
#include "tscv/format.hpp"

namespace tscv {
namespace {

/// Partial derivatives of H and g tabulated over the state range.
struct Tabulation {
    GridFunction d2h;
    GridFunction d3h;
    GridFunction d4h;
    GridFunction d2g;
    GridFunction d3g;
};

Tabulation tabulate(const Problem& problem, const Trajectory& y, Multipliers m) {
    const std::size_t lo = problem.state_first();
    const std::size_t hi = problem.state_last();
    const std::size_t n = hi - lo + 1;
    std::vector<double> d2h(n), d3h(n), d4h(n), d2g(n), d3g(n);
    for (std::size_t i = lo; i <= hi; ++i) {
        const State s = y.state(problem, i);
        Partials pl, pf, pg;
        try {
            pl = problem.lagrangian_partials(s);
            pf = problem.constraint_partials(s);
            pg = problem.generator_partials(s);
        } catch (const Error& e) {
            throw Error(e.code(), std::string(e.what()) + " at t = " + format_shortest(s.t));
        }
        const std::size_t k = i - lo;
        d2h[k] = m.lam0 * pl.y - m.lam * pf.y;
        d3h[k] = m.lam0 * pl.v - m.lam * pf.v;
        d4h[k] = m.lam0 * pl.z - m.lam * pf.z;
        d2g[k] = pg.y;
        d3g[k] = pg.v;
    }
    const TimeScale& ts = problem.scale();
    return {GridFunction(ts, lo, std::move(d2h)), GridFunction(ts, lo, std::move(d3h)),
            GridFunction(ts, lo, std::move(d4h)), GridFunction(ts, lo, std::move(d2g)),
            GridFunction(ts, lo, std::move(d3g))};
}

GridFunction inner_from(const Problem& problem, const GridFunction& d4h) {
    const TimeScale& ts = problem.scale();
    const Flavor flavor = problem.flavor();
    std::vector<double> out(d4h.size());
    for (std::size_t i = d4h.first(); i <= d4h.last(); ++i) {
        const std::size_t from = flavor == Flavor::delta ? ts.sigma_index(i) : ts.rho_index(i);
        out[i - d4h.first()] = integral_between(d4h, from, problem.ib(), flavor);
    }
    return GridFunction(ts, d4h.first(), std::move(out));
}

GridFunction product(const GridFunction& f, const GridFunction& g) {
    std::vector<double> out(f.size());
    for (std::size_t i = f.first(); i <= f.last(); ++i) out[i - f.first()] = f(i) * g(i);
    return GridFunction(f.scale(), f.first(), std::move(out));
}

double max_abs_of(const GridFunction& f) {
    double m = 0.0;
    for (double v : f.values()) m = std::max(m, std::abs(v));
    return m;
}

ResidualReport compute(const Problem& problem, const Trajectory& y, Multipliers m) {
    const TimeScale& ts = problem.scale();
    const Flavor flavor = problem.flavor();
    const Tabulation tab = tabulate(problem, y, m);
    const GridFunction inner = inner_from(problem, tab.d4h);
    const GridFunction g3_inner = product(tab.d3g, inner);

    ResidualReport report(ts);
    report.multipliers = m;

    // Differential form on the points where the derivative of the tabulated
    // quantities exists.
    const GridFunction d3h_diff = derivative(tab.d3h, flavor);
    const GridFunction g3_inner_diff = derivative(g3_inner, flavor);
    std::vector<double> residual(d3h_diff.size());
    double d2h_scale = 0.0;
    for (std::size_t i = d3h_diff.first(); i <= d3h_diff.last(); ++i) {
        residual[i - d3h_diff.first()] =
            tab.d2h(i) - d3h_diff(i) + tab.d2g(i) * inner(i) - g3_inner_diff(i);
        d2h_scale = std::max(d2h_scale, std::abs(tab.d2h(i)));
    }
    report.pointwise = GridFunction(ts, d3h_diff.first(), std::move(residual));
    report.max_abs = max_abs_of(report.pointwise);
    report.d2h_scale = d2h_scale;

    // Integral form.
    std::vector<double> rest(inner.size());
    for (std::size_t i = inner.first(); i <= inner.last(); ++i) {
        rest[i - inner.first()] = tab.d2h(i) + tab.d2g(i) * inner(i);
    }
    const GridFunction integrand(ts, inner.first(), std::move(rest));
    std::vector<double> q(inner.size());
    for (std::size_t i = inner.first(); i <= inner.last(); ++i) {
        q[i - inner.first()] = tab.d3h(i) + g3_inner(i) + integral_between(integrand, i, problem.ib(), flavor);
    }
    double mean = 0.0;
    for (double v : q) mean += v;
    mean /= static_cast<double>(q.size());
    double deviation = 0.0;
    for (double v : q) deviation = std::max(deviation, std::abs(v - mean));
    report.integral_form = GridFunction(ts, inner.first(), std::move(q));
    report.integral_form_deviation = deviation;

    const auto& spec = problem.spec();
    if (spec.left.is_free) report.boundary_left = tab.d3h(problem.ia()) + g3_inner(problem.ia());
    if (spec.right.is_free) report.boundary_right = tab.d3h(problem.ib()) + g3_inner(problem.ib());
    return report;
}

}  // namespace

bool ResidualReport::satisfied(double rel_tol) const {
    const double bound = rel_tol * (1.0 + d2h_scale);
    if (max_abs > bound) return false;
    if (boundary_left && std::abs(*boundary_left) > bound) return false;
    if (boundary_right && std::abs(*boundary_right) > bound) return false;
    return true;
}

GridFunction inner_integral(const Problem& problem, const Trajectory& y, Multipliers m) {
    return inner_from(problem, tabulate(problem, y, m).d4h);
}

ResidualReport el_residual(const Problem& problem, const Trajectory& y, Multipliers m) {
    return compute(problem, y, m);
}

ResidualReport el_residual_integral_form(const Problem& problem, const Trajectory& y, Multipliers m) {
    ResidualReport report = compute(problem, y, m);
    const GridFunction& q = report.integral_form;
    double mean = 0.0;
    for (double v : q.values()) mean += v;
    mean /= static_cast<double>(q.size());
    std::vector<double> centred;
    for (double v : q.values()) centred.push_back(v - mean);
    report.pointwise = GridFunction(q.scale(), q.first(), std::move(centred));
    report.max_abs = report.integral_form_deviation;
    return report;
}

std::pair<std::optional<double>, std::optional<double>> natural_boundary_residuals(
    const Problem& problem, const Trajectory& y, Multipliers m) {
    const auto& spec = problem.spec();
    if (!spec.left.is_free && !spec.right.is_free) {
        throw Error(ErrorCode::EndpointNotFree, "natural boundary conditions need a free endpoint");
    }
    const ResidualReport report = compute(problem, y, m);
    return {report.boundary_left, report.boundary_right};
}

GridFunction corollary_residual(const Problem& problem, const Trajectory& y, Multipliers m, QuantumKind kind) {
    if (problem.flavor() != Flavor::delta) {
        throw Error(ErrorCode::FlavorMismatch, "the h- and q-calculus forms are delta-flavored");
    }
    const TimeScale& ts = problem.scale();
    const std::size_t n = ts.size();
    const double a = problem.spec().a;

    // Closed-form points t_k and graininess w_k of hZ or q^N0, relative to a.
    std::function<double(std::size_t)> point;
    std::function<double(std::size_t)> grain;
    if (kind == QuantumKind::h_calculus) {
        const double h = ts[1] - ts[0];
        for (std::size_t i = 1; i < n; ++i) {
            if (std::abs(ts[i] - ts[i - 1] - h) > 1e-9 * h) {
                throw Error(ErrorCode::ScaleKindMismatch, "time scale is not of the form hZ");
            }
        }
        point = [a, h](std::size_t k) { return a + static_cast<double>(k) * h; };
        grain = [h](std::size_t) { return h; };
    } else {
        const double q = ts[1] / ts[0];
        if (!(ts[0] > 0) || !(q > 1)) throw Error(ErrorCode::ScaleKindMismatch, "time scale is not of the form q^N0");
        for (std::size_t i = 1; i < n; ++i) {
            if (std::abs(ts[i] / ts[i - 1] - q) > 1e-9 * q) {
                throw Error(ErrorCode::ScaleKindMismatch, "time scale is not of the form q^N0");
            }
        }
        point = [a, q](std::size_t k) { return a * std::pow(q, static_cast<double>(k)); };
        grain = [a, q](std::size_t k) { return (q - 1) * a * std::pow(q, static_cast<double>(k)); };
    }

    // Values y_k = y(t_k) for k = 0 .. K (+1 with the extra point).
    const std::size_t ia = problem.ia();
    const std::size_t big_k = problem.ib() - ia;
    const std::size_t top = big_k + (problem.extra_right() ? 1 : 0);
    std::vector<double> yk(top + 1);
    for (std::size_t k = 0; k <= top; ++k) yk[k] = y.y().at(ia + k);

    // States exist for k = 0 .. top-1.
    const std::size_t states = top;
    std::vector<double> zk(states, 0.0);
    std::vector<double> d2h(states), d3h(states), d4h(states), d2g(states), d3g(states);
    for (std::size_t k = 0; k < states; ++k) {
        const double w = grain(k);
        const double slope = (yk[k + 1] - yk[k]) / w;
        if (k > 0) {
            const double wp = grain(k - 1);
            const double slope_prev = (yk[k] - yk[k - 1]) / wp;
            zk[k] = zk[k - 1] + wp * problem.generator({point(k - 1), yk[k], slope_prev, 0.0});
        }
        const State s{point(k), yk[k + 1], slope, zk[k]};
        const Partials pl = problem.lagrangian_partials(s);
        const Partials pf = problem.constraint_partials(s);
        const Partials pg = problem.generator_partials(s);
        d2h[k] = m.lam0 * pl.y - m.lam * pf.y;
        d3h[k] = m.lam0 * pl.v - m.lam * pf.v;
        d4h[k] = m.lam0 * pl.z - m.lam * pf.z;
        d2g[k] = pg.y;
        d3g[k] = pg.v;
    }

    // S_k = sum_{tau = sigma(t_k)}^{rho(b)} w_tau d4H_tau, oriented when sigma(t_k) > b.
    std::vector<double> sum(states);
    for (std::size_t k = 0; k < states; ++k) {
        double s = 0.0;
        if (k + 1 <= big_k) {
            for (std::size_t j = k + 1; j < big_k; ++j) s += grain(j) * d4h[j];
        } else {
            for (std::size_t j = big_k; j < k + 1; ++j) s -= grain(j) * d4h[j];
        }
        sum[k] = s;
    }

    std::vector<double> out;
    for (std::size_t k = 0; k + 1 < states; ++k) {
        const double w = grain(k);
        out.push_back(d2h[k] - (d3h[k + 1] - d3h[k]) / w + d2g[k] * sum[k] -
                      (d3g[k + 1] * sum[k + 1] - d3g[k] * sum[k]) / w);
    }
    return GridFunction(ts, ia, std::move(out));
}

std::vector<double> variation_pairings(const GridFunction& f, std::size_t ia, std::size_t ib) {
    const TimeScale& ts = f.scale();
    std::vector<double> out;
    for (std::size_t j = ia + 1; j < ib; ++j) {
        double pairing = 0.0;
        for (std::size_t t = ia; t < ib; ++t) {
            const double eta_sigma = ts.sigma_index(t) == j ? 1.0 : 0.0;
            pairing += ts.mu(t) * f.at(t) * eta_sigma;
        }
        out.push_back(pairing);
    }
    return out;
}

double estimate_multiplier(const Problem& problem, const Trajectory& y) {
    if (!problem.has_constraint()) return 0.0;
    const ResidualReport rl = compute(problem, y, {1.0, 0.0});
    const ResidualReport rf = compute(problem, y, {0.0, -1.0});
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = rl.pointwise.first(); i <= rl.pointwise.last(); ++i) {
        num += rl.pointwise(i) * rf.pointwise(i);
        den += rf.pointwise(i) * rf.pointwise(i);
    }
    return den > 0 ? num / den : 0.0;
}

}  // namespace tscv
