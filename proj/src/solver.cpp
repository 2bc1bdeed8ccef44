#include "tscv/solver.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include "tscv/error.hpp"

namespace tscv {

const char* to_string(SolveStatus status) {
    switch (status) {
        case SolveStatus::converged: return "converged";
        case SolveStatus::max_iterations: return "max-iterations";
        case SolveStatus::line_search_failure: return "line-search-failure";
        case SolveStatus::stagnation: return "stagnation";
    }
    return "?";
}

namespace {

struct Sums {
    double l = 0.0;
    double f = 0.0;
};

// Evaluates the transcribed functionals on a frame of values covering
// [first_index, last_index], with cheap partial re-evaluation for gradients.
class Evaluator {
public:
    explicit Evaluator(const Problem& p)
        : p_(p), ts_(p.scale()), delta_(p.flavor() == Flavor::delta), first_(p.first_index()),
          constrained_(p.has_constraint()),
          uses_z_(p.lagrangian_uses_z() || (p.has_constraint() && p.constraint_uses_z())) {}

    std::size_t first() const { return first_; }

    // Full pass; fills base_z_ for later partial sums.
    Sums full(const std::vector<double>& y) {
        base_z_.assign(p_.ib() - p_.ia() + 1, 0.0);
        Sums s;
        double z = 0.0;
        if (delta_) {
            for (std::size_t i = p_.ia(); i < p_.ib(); ++i) {
                State st = state(y, i);
                st.z = z;
                add(s, st, ts_.mu(i));
                z += ts_.mu(i) * p_.generator(st);
                base_z_[i + 1 - p_.ia()] = z;
            }
        } else {
            for (std::size_t i = p_.ia() + 1; i <= p_.ib(); ++i) {
                State st = state(y, i);
                z += ts_.nu(i) * p_.generator(st);
                st.z = z;
                base_z_[i - p_.ia()] = z;
                add(s, st, ts_.nu(i));
            }
        }
        return s;
    }

    // Sum of the terms that depend on y at scale index c. Requires a prior full()
    // on a frame that agrees with y everywhere except at c.
    Sums local(const std::vector<double>& y, std::size_t c) const {
        const std::size_t tf = p_.term_first();
        const std::size_t tl = p_.term_last();
        std::size_t lo = delta_ ? (c == 0 ? 0 : c - 1) : c;
        std::size_t hi = uses_z_ ? tl : (delta_ ? c : c + 1);
        lo = std::max(lo, tf);
        hi = std::min(hi, tl);
        Sums s;
        if (lo > hi) return s;
        if (delta_) {
            double z = base_z_[lo - p_.ia()];
            for (std::size_t i = lo; i <= hi; ++i) {
                State st = state(y, i);
                st.z = z;
                add(s, st, ts_.mu(i));
                if (uses_z_) z += ts_.mu(i) * p_.generator(st);
            }
        } else {
            double z = base_z_[lo - 1 - p_.ia()];
            for (std::size_t i = lo; i <= hi; ++i) {
                State st = state(y, i);
                if (uses_z_) z += ts_.nu(i) * p_.generator(st);
                st.z = z;
                add(s, st, ts_.nu(i));
            }
        }
        return s;
    }

private:
    State state(const std::vector<double>& y, std::size_t i) const {
        const double here = y[i - first_];
        if (delta_) {
            const double next = y[i + 1 - first_];
            return {ts_[i], next, (next - here) / ts_.mu(i), 0.0};
        }
        const double prev = y[i - 1 - first_];
        return {ts_[i], prev, (here - prev) / ts_.nu(i), 0.0};
    }

    void add(Sums& s, const State& st, double w) const {
        s.l += w * p_.lagrangian(st);
        if (constrained_) s.f += w * p_.constraint(st);
    }

    const Problem& p_;
    const TimeScale& ts_;
    bool delta_;
    std::size_t first_;
    bool constrained_;
    bool uses_z_;
    std::vector<double> base_z_;
};

std::vector<double> frame_values(const Problem& problem, const GridFunction& y) {
    const std::size_t lo = problem.first_index();
    const std::size_t hi = problem.last_index();
    if (!(y.scale() == problem.scale())) {
        throw Error(ErrorCode::TrajectoryDomainError, "trajectory lives on a different time scale");
    }
    std::vector<double> values(hi - lo + 1);
    for (std::size_t i = lo; i <= hi; ++i) values[i - lo] = y.at(i);
    return values;
}

struct RawGradient {
    std::vector<double> dl;
    std::vector<double> df;
};

RawGradient raw_gradient(const Problem& problem, Evaluator& ev, std::vector<double> y,
                         const std::vector<std::size_t>& coords, double step) {
    ev.full(y);
    RawGradient g{std::vector<double>(coords.size()), std::vector<double>(coords.size())};
    for (std::size_t k = 0; k < coords.size(); ++k) {
        const std::size_t c = coords[k];
        double& slot = y[c - ev.first()];
        const double keep = slot;
        const double h = step * std::max(1.0, std::abs(keep));
        slot = keep + h;
        const Sums plus = ev.local(y, c);
        slot = keep - h;
        const Sums minus = ev.local(y, c);
        slot = keep;
        g.dl[k] = (plus.l - minus.l) / (2 * h);
        g.df[k] = (plus.f - minus.f) / (2 * h);
    }
    (void)problem;
    return g;
}

double inf_norm(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

struct MinimizeResult {
    std::vector<double> x;
    double f = 0.0;
    std::vector<double> g;
    std::size_t iterations = 0;
    SolveStatus status = SolveStatus::max_iterations;
};

using ValueFn = std::function<double(const std::vector<double>&)>;
using GradFn = std::function<std::vector<double>(const std::vector<double>&)>;

// BFGS on a dense inverse Hessian with Armijo backtracking. The value
// function returns +inf where the integrands are undefined.
MinimizeResult bfgs(const ValueFn& value, const GradFn& grad, std::vector<double> x, double tol,
                    std::size_t max_iter) {
    const std::size_t n = x.size();
    MinimizeResult r;
    r.f = value(x);
    if (!std::isfinite(r.f)) throw Error(ErrorCode::DomainError, "objective undefined at the starting trajectory");
    r.x = std::move(x);
    if (n == 0) {
        r.status = SolveStatus::converged;
        return r;
    }
    r.g = grad(r.x);

    std::vector<double> hinv(n * n, 0.0);
    bool identity = true;
    const auto reset = [&](double scale) {
        std::fill(hinv.begin(), hinv.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) hinv[i * n + i] = scale;
        identity = true;
    };
    reset(1.0);
    bool fresh = true;  // rescale H0 after the next successful step

    std::vector<double> p(n), xn(n), s(n), yv(n), hy(n);
    constexpr double c1 = 1e-4;
    std::size_t it = 0;
    for (; it < max_iter; ++it) {
        if (inf_norm(r.g) <= tol) {
            r.status = SolveStatus::converged;
            break;
        }
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc -= hinv[i * n + j] * r.g[j];
            p[i] = acc;
        }
        double slope = dot(r.g, p);
        if (!(slope < 0)) {
            reset(1.0);
            for (std::size_t i = 0; i < n; ++i) p[i] = -r.g[i];
            slope = dot(r.g, p);
        }

        const double noise = 1e-14 * (1.0 + std::abs(r.f));
        double alpha = 1.0;
        double fn = 0.0;
        bool accepted = false;
        while (alpha > 1e-20) {
            for (std::size_t i = 0; i < n; ++i) xn[i] = r.x[i] + alpha * p[i];
            fn = value(xn);
            if (std::isfinite(fn) && fn <= r.f + c1 * alpha * slope + noise) {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) {
            if (!identity) {
                reset(1.0);
                fresh = true;
                continue;
            }
            r.status = SolveStatus::line_search_failure;
            break;
        }

        std::vector<double> gn = grad(xn);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = xn[i] - r.x[i];
            yv[i] = gn[i] - r.g[i];
        }
        r.x = xn;
        r.f = fn;
        r.g = std::move(gn);

        const double sy = dot(s, yv);
        const double yy = dot(yv, yv);
        if (!(sy > 1e-12 * std::sqrt(dot(s, s) * yy))) {
            reset(1.0);
            fresh = true;
            continue;
        }
        if (fresh) {
            reset(sy / yy);
            fresh = false;
        }
        // H <- (I - rho s y') H (I - rho y s') + rho s s'
        const double rho = 1.0 / sy;
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += hinv[i * n + j] * yv[j];
            hy[i] = acc;
        }
        const double yhy = dot(yv, hy);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                hinv[i * n + j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
            }
        }
        identity = false;
    }
    if (it == max_iter && inf_norm(r.g) <= tol) r.status = SolveStatus::converged;
    r.iterations = it;
    return r;
}

struct Frame {
    std::vector<double> y;
    std::vector<std::size_t> coords;
    std::size_t first = 0;

    std::vector<double> pack() const {
        std::vector<double> x(coords.size());
        for (std::size_t k = 0; k < coords.size(); ++k) x[k] = y[coords[k] - first];
        return x;
    }
    const std::vector<double>& unpack(const std::vector<double>& x) {
        for (std::size_t k = 0; k < coords.size(); ++k) y[coords[k] - first] = x[k];
        return y;
    }
};

Frame make_frame(const Problem& problem, const std::optional<GridFunction>& y0) {
    Frame fr;
    fr.first = problem.first_index();
    fr.coords = free_coordinates(problem);
    const GridFunction guess = initial_guess(problem);
    fr.y.assign(guess.values().begin(), guess.values().end());
    if (y0) {
        if (!(y0->scale() == problem.scale())) {
            throw Error(ErrorCode::TrajectoryDomainError, "initial trajectory lives on a different time scale");
        }
        for (std::size_t c : fr.coords) fr.y[c - fr.first] = y0->at(c);
    }
    return fr;
}

double safe(const std::function<double()>& fn) {
    try {
        const double v = fn();
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    } catch (const Error& e) {
        if (e.code() == ErrorCode::DomainError) return std::numeric_limits<double>::infinity();
        throw;
    }
}

void finish(const Problem& problem, Solution& sol, const std::vector<double>& frame, double lam) {
    const TimeScale& ts = problem.scale();
    GridFunction y(ts, problem.first_index(), frame);
    const Multipliers m{1.0, lam};
    y = complete_extra_point(problem, std::move(y), m);
    const Trajectory traj(problem, y);
    sol.y = traj.y();
    sol.z = traj.z();
    const Functionals fv = evaluate_functionals(problem, sol.y);
    sol.objective = fv.objective;
    sol.constraint_value = fv.constraint;
    sol.lam0 = 1.0;
    if (problem.has_constraint()) sol.lam = lam;
    sol.report = el_residual(problem, traj, m);
}

}  // namespace

Functionals evaluate_functionals(const Problem& problem, const GridFunction& y) {
    Evaluator ev(problem);
    const Sums s = ev.full(frame_values(problem, y));
    Functionals out{s.l, std::nullopt};
    if (problem.has_constraint()) out.constraint = s.f;
    return out;
}

std::vector<std::size_t> free_coordinates(const Problem& problem) {
    std::vector<std::size_t> coords;
    const auto& spec = problem.spec();
    if (spec.left.is_free) coords.push_back(problem.ia());
    for (std::size_t i = problem.ia() + 1; i < problem.ib(); ++i) coords.push_back(i);
    if (spec.right.is_free) coords.push_back(problem.ib());
    return coords;
}

Gradient gradient(const Problem& problem, const GridFunction& y, double fd_step) {
    Evaluator ev(problem);
    Gradient out;
    out.coordinates = free_coordinates(problem);
    RawGradient g = raw_gradient(problem, ev, frame_values(problem, y), out.coordinates, fd_step);
    out.objective = std::move(g.dl);
    if (problem.has_constraint()) out.constraint = std::move(g.df);
    return out;
}

GridFunction complete_extra_point(const Problem& problem, GridFunction y, Multipliers m) {
    if (!problem.extra_right() && !problem.extra_left()) return y;
    const bool right = problem.extra_right();
    const std::size_t k = right ? problem.last_index() : problem.first_index();
    std::vector<double> values = frame_values(problem, y);
    const std::size_t slot = k - problem.first_index();
    const TimeScale& ts = problem.scale();

    const auto residual = [&](double v) {
        values[slot] = v;
        const Trajectory traj(problem, GridFunction(ts, problem.first_index(), values));
        const auto [left_r, right_r] = natural_boundary_residuals(problem, traj, m);
        return right ? *right_r : *left_r;
    };

    double x0 = values[slot];
    double f0 = 0.0;
    try {
        f0 = residual(x0);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::DomainError) throw;
        return GridFunction(ts, problem.first_index(), values);
    }
    double best = x0;
    double best_f = std::abs(f0);
    double x1 = x0 + 1e-3 * std::max(1.0, std::abs(x0));
    for (int iter = 0; iter < 60 && best_f > 0; ++iter) {
        double f1 = 0.0;
        try {
            f1 = residual(x1);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::DomainError) throw;
            x1 = 0.5 * (x0 + x1);
            continue;
        }
        if (std::abs(f1) < best_f) {
            best = x1;
            best_f = std::abs(f1);
        }
        if (f1 == f0 || std::abs(x1 - x0) <= 1e-15 * std::max(1.0, std::abs(x1))) break;
        const double x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
        if (!std::isfinite(x2)) break;
        x0 = x1;
        f0 = f1;
        x1 = x2;
    }
    values[slot] = best;
    return GridFunction(ts, problem.first_index(), values);
}

Solution solve_unconstrained(const Problem& problem, const SolveOptions& opts, std::optional<GridFunction> y0) {
    if (problem.has_constraint()) {
        throw Error(ErrorCode::ValidationError, "solve_unconstrained called on a constrained problem");
    }
    const double sign = problem.spec().sense == Sense::maximize ? -1.0 : 1.0;
    Frame fr = make_frame(problem, y0);
    Evaluator ev(problem);

    const ValueFn value = [&](const std::vector<double>& x) {
        return safe([&] { return sign * ev.full(fr.unpack(x)).l; });
    };
    const GradFn grad = [&](const std::vector<double>& x) {
        RawGradient g = raw_gradient(problem, ev, fr.unpack(x), fr.coords, opts.fd_step);
        for (double& d : g.dl) d *= sign;
        return g.dl;
    };
    const MinimizeResult r = bfgs(value, grad, fr.pack(), opts.tol_grad, opts.max_iter);
    fr.unpack(r.x);

    Solution sol(problem.scale());
    sol.iterations = r.iterations;
    sol.status = r.status;
    sol.converged = r.status == SolveStatus::converged;
    sol.grad_norm = inf_norm(r.g);
    finish(problem, sol, fr.y, 0.0);
    sol.message = to_string(r.status);
    return sol;
}

Solution solve_isoperimetric(const Problem& problem, const SolveOptions& opts, std::optional<GridFunction> y0) {
    if (!problem.has_constraint()) {
        throw Error(ErrorCode::ValidationError, "solve_isoperimetric needs a constraint");
    }
    const double sign = problem.spec().sense == Sense::maximize ? -1.0 : 1.0;
    const double gamma = *problem.spec().gamma;
    Frame fr = make_frame(problem, y0);
    Evaluator ev(problem);

    double lam = 0.0;  // multiplier of the minimization form
    double pen = 10.0;
    constexpr double pen_max = 1e10;
    double prev_c = std::numeric_limits<double>::infinity();

    const ValueFn value = [&](const std::vector<double>& x) {
        return safe([&] {
            const Sums s = ev.full(fr.unpack(x));
            const double c = s.f - gamma;
            return sign * s.l - lam * c + 0.5 * pen * c * c;
        });
    };
    const GradFn grad = [&](const std::vector<double>& x) {
        const Sums s = ev.full(fr.unpack(x));
        const double c = s.f - gamma;
        RawGradient g = raw_gradient(problem, ev, fr.y, fr.coords, opts.fd_step);
        std::vector<double> out(g.dl.size());
        for (std::size_t k = 0; k < out.size(); ++k) out[k] = sign * g.dl[k] - (lam - pen * c) * g.df[k];
        return out;
    };

    Solution sol(problem.scale());
    std::vector<double> x = fr.pack();
    SolveStatus status = SolveStatus::max_iterations;
    std::size_t total = 0;
    double grad_norm = 0.0;
    for (std::size_t outer = 0; outer < opts.max_outer; ++outer) {
        const MinimizeResult r = bfgs(value, grad, x, opts.tol_grad, opts.max_iter);
        x = r.x;
        total += r.iterations;
        const double c = ev.full(fr.unpack(x)).f - gamma;
        // The inner gradient at the updated multiplier is the Lagrangian gradient.
        lam -= pen * c;
        grad_norm = inf_norm(r.g);
        if (std::abs(c) <= opts.tol_con && r.status == SolveStatus::converged) {
            status = SolveStatus::converged;
            break;
        }
        if (std::abs(c) > 0.25 * prev_c) pen *= 10;
        prev_c = std::abs(c);
        if (pen > pen_max) {
            status = SolveStatus::stagnation;
            break;
        }
        status = r.status == SolveStatus::converged ? SolveStatus::max_iterations : r.status;
    }
    fr.unpack(x);

    sol.iterations = total;
    sol.status = status;
    sol.converged = status == SolveStatus::converged;
    sol.grad_norm = grad_norm;
    // H = L - lam F for the original sense: max L is min(-L), so the sign flips.
    finish(problem, sol, fr.y, sign * lam);
    sol.message = to_string(status);
    if (status == SolveStatus::stagnation) sol.message += ": constraint not attained, possibly infeasible";
    return sol;
}

Solution solve(const Problem& problem, const SolveOptions& opts, std::optional<GridFunction> y0) {
    return problem.has_constraint() ? solve_isoperimetric(problem, opts, std::move(y0))
                                    : solve_unconstrained(problem, opts, std::move(y0));
}

Normality classify_normality(const Problem& problem, const Solution& solution, double rel_tol) {
    if (!problem.has_constraint()) return Normality::normal;
    const Trajectory traj(problem, solution.y);
    const ResidualReport r = el_residual(problem, traj, Multipliers{0.0, -1.0});
    return r.max_abs <= rel_tol * (1.0 + r.d2h_scale) ? Normality::abnormal : Normality::normal;
}

OracleResult brute_force_oracle(const Problem& problem, const std::vector<std::vector<double>>& grid, double slack,
                                std::size_t max_candidates) {
    const std::vector<std::size_t> coords = free_coordinates(problem);
    if (grid.size() != coords.size()) {
        throw Error(ErrorCode::BadParameters, "oracle grid needs one value list per free coordinate (" +
                                                  std::to_string(coords.size()) + ")");
    }
    std::vector<std::vector<double>> lists = grid;
    double total = 1.0;
    for (auto& l : lists) {
        if (l.empty()) throw Error(ErrorCode::BadParameters, "oracle value list is empty");
        std::sort(l.begin(), l.end());
        total *= static_cast<double>(l.size());
    }
    if (coords.size() > 6 || total > static_cast<double>(max_candidates)) {
        throw Error(ErrorCode::SearchSpaceTooLarge,
                    "oracle search space has " + std::to_string(coords.size()) + " coordinates and " +
                        std::to_string(static_cast<long long>(total)) + " candidates (limits: 6 and " +
                        std::to_string(max_candidates) + ")");
    }

    const double sign = problem.spec().sense == Sense::maximize ? -1.0 : 1.0;
    const bool constrained = problem.has_constraint();
    const double gamma = constrained ? *problem.spec().gamma : 0.0;
    Frame fr = make_frame(problem, std::nullopt);
    Evaluator ev(problem);

    std::vector<std::size_t> pos(coords.size(), 0);
    std::vector<double> best_y;
    double best = std::numeric_limits<double>::infinity();
    std::optional<double> best_con;
    std::size_t count = 0;
    while (true) {
        for (std::size_t k = 0; k < coords.size(); ++k) fr.y[coords[k] - fr.first] = lists[k][pos[k]];
        ++count;
        Sums s;
        bool ok = true;
        try {
            s = ev.full(fr.y);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::DomainError) throw;
            ok = false;
        }
        if (ok && std::isfinite(s.l) && (!constrained || std::abs(s.f - gamma) <= slack)) {
            const double v = sign * s.l;
            if (v < best) {
                best = v;
                best_y = fr.y;
                if (constrained) best_con = s.f;
            }
        }
        // Odometer with the last coordinate fastest gives lexicographic order.
        bool more = false;
        for (std::size_t k = coords.size(); k-- > 0;) {
            if (++pos[k] < lists[k].size()) {
                more = true;
                break;
            }
            pos[k] = 0;
        }
        if (!more) break;
    }
    if (best_y.empty()) {
        throw Error(constrained ? ErrorCode::EmptyFeasibleSet : ErrorCode::DomainError,
                    constrained ? "no candidate satisfies the constraint within the slack"
                                : "objective undefined at every candidate");
    }
    OracleResult out(problem.scale());
    GridFunction y(problem.scale(), fr.first, best_y);
    out.y = complete_extra_point(problem, std::move(y));
    out.objective = sign * best;
    out.constraint = best_con;
    out.candidates = count;
    return out;
}

}  // namespace tscv
