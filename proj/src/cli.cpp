#include "tscv/cli.hpp"

#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "tscv/csv.hpp"
#include "tscv/duality.hpp"
#include "tscv/error.hpp"
#include "tscv/format.hpp"
#include "tscv/problem_file.hpp"
#include "tscv/solver.hpp"

namespace tscv {

namespace {

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::DomainError:
        case ErrorCode::EmptyFeasibleSet:
        case ErrorCode::NonFiniteInput: return exit_numeric;
        default: return exit_usage;
    }
}

// Writes through `path`, or to `fallback` when the path is empty.
template <typename Fn>
void with_output(const std::string& path, std::ostream& fallback, Fn&& fn) {
    if (path.empty()) {
        fn(fallback);
        return;
    }
    std::ofstream file(path, std::ios::binary);
    if (!file) throw Error(ErrorCode::IoError, "cannot write " + path);
    fn(file);
    if (!file) throw Error(ErrorCode::IoError, "write failed for " + path);
}

void print_report_summary(std::ostream& out, const ResidualReport& r) {
    out << "residual_max: " << format_double(r.max_abs) << '\n';
    if (r.boundary_left) out << "boundary_left: " << format_double(*r.boundary_left) << '\n';
    if (r.boundary_right) out << "boundary_right: " << format_double(*r.boundary_right) << '\n';
    out << "integral_form_deviation: " << format_double(r.integral_form_deviation) << '\n';
}

Multipliers multipliers_for(const Problem& problem, const Trajectory& traj, std::optional<double> lam0,
                            std::optional<double> lam) {
    Multipliers m;
    m.lam0 = lam0.value_or(1.0);
    if (lam) m.lam = *lam;
    else if (problem.has_constraint()) m.lam = m.lam0 * estimate_multiplier(problem, traj);
    return m;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Variational problems on finite time scales"};
    app.name("tscv");
    app.require_subcommand(1);
    app.set_help_flag("--help", "Print this help message and exit");

    std::string file, out_path, y_path;
    double tol = -1.0;
    std::size_t max_iter = 500;
    std::optional<double> lam0, lam;

    auto* solve_cmd = app.add_subcommand("solve", "Solve a problem file and write the solution CSV");
    solve_cmd->add_option("problem", file, "Problem file")->required();
    solve_cmd->add_option("--out", out_path, "Solution CSV path (default: stdout)");
    solve_cmd->add_option("--tol", tol, "Gradient tolerance (default 1e-9)");
    solve_cmd->add_option("--max-iter", max_iter, "Iteration limit per BFGS run");
    solve_cmd->add_option("--y", y_path, "Initial trajectory CSV");

    auto* residual_cmd = app.add_subcommand("residual", "Euler-Lagrange residuals of a trajectory");
    residual_cmd->add_option("problem", file, "Problem file")->required();
    residual_cmd->add_option("--y", y_path, "Trajectory CSV")->required();
    residual_cmd->add_option("--lam0", lam0, "Multiplier of L (default 1)");
    residual_cmd->add_option("--lam", lam, "Multiplier of F (default: least squares)");
    residual_cmd->add_option("--out", out_path, "Report CSV path (default: stdout)");

    auto* check_cmd = app.add_subcommand("check", "Exit 0 iff every residual maximum is within --tol");
    check_cmd->add_option("problem", file, "Problem file")->required();
    check_cmd->add_option("--y", y_path, "Trajectory CSV")->required();
    check_cmd->add_option("--tol", tol, "Absolute tolerance (default 1e-6)");
    check_cmd->add_option("--lam0", lam0, "Multiplier of L (default 1)");
    check_cmd->add_option("--lam", lam, "Multiplier of F (default: least squares)");

    auto* dual_cmd = app.add_subcommand("dual", "Write the dual problem on the reflected scale");
    dual_cmd->add_option("problem", file, "Problem file")->required();
    dual_cmd->add_option("--out", out_path, "Output problem file (default: stdout)");

    std::string kind;
    double start = 0.0, stop = 1.0, h = 0.0, q = 0.0;
    std::size_t n = 0;
    auto* gen_cmd = app.add_subcommand("gen-scale", "Write a point list");
    gen_cmd->add_option("--kind", kind, "uniform, hz or q")->required()->check(CLI::IsMember({"uniform", "hz", "q"}));
    gen_cmd->add_option("--start", start, "First point")->required();
    gen_cmd->add_option("--stop", stop, "Last point")->required();
    gen_cmd->add_option("--n", n, "Number of points (uniform)");
    gen_cmd->add_option("--h", h, "Step (hz)");
    gen_cmd->add_option("--q", q, "Ratio (q)");
    gen_cmd->add_option("--out", out_path, "Output file (default: stdout)");

    std::size_t values = 21;
    double lo = -1.0, hi = 1.0, slack = 1e-2;
    auto* oracle_cmd = app.add_subcommand("oracle", "Exhaustive search over a value grid");
    oracle_cmd->add_option("problem", file, "Problem file")->required();
    oracle_cmd->add_option("--values", values, "Grid values per coordinate (<= 41)")->check(CLI::Range(1, 41));
    oracle_cmd->add_option("--lo", lo, "Smallest grid value");
    oracle_cmd->add_option("--hi", hi, "Largest grid value");
    oracle_cmd->add_option("--slack", slack, "Constraint slack");
    oracle_cmd->add_option("--out", out_path, "Solution CSV path (default: stdout)");

    std::vector<const char*> argv{"tscv"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        if (gen_cmd->parsed()) {
            std::optional<TimeScale> ts;
            if (kind == "uniform") {
                if (n == 0) throw Error(ErrorCode::BadParameters, "--n is required for --kind uniform");
                ts = TimeScale::uniform(start, stop, n);
            } else if (kind == "hz") {
                ts = TimeScale::h_scale(h, start, stop);
            } else {
                ts = TimeScale::q_scale(q, start, stop);
            }
            with_output(out_path, out, [&](std::ostream& o) { write_points(o, *ts); });
            return exit_ok;
        }

        const ProblemSpec spec = load_config(file);
        if (dual_cmd->parsed()) {
            const ProblemSpec dual = dualize_problem(spec);
            with_output(out_path, out, [&](std::ostream& o) { write_config(o, dual); });
            return exit_ok;
        }

        const Problem problem(spec);
        if (solve_cmd->parsed()) {
            SolveOptions opts;
            if (tol > 0) opts.tol_grad = tol;
            opts.max_iter = max_iter;
            std::optional<GridFunction> y0;
            if (!y_path.empty()) y0 = read_trajectory_csv(y_path, problem.scale());
            const Solution sol = solve(problem, opts, y0);
            out << "status: " << to_string(sol.status) << '\n';
            out << "objective: " << format_double(sol.objective) << '\n';
            if (sol.constraint_value) out << "constraint_value: " << format_double(*sol.constraint_value) << '\n';
            out << "lam0: " << format_double(sol.lam0) << '\n';
            if (sol.lam) out << "lam: " << format_double(*sol.lam) << '\n';
            print_report_summary(out, sol.report);
            out << "grad_norm: " << format_double(sol.grad_norm) << '\n';
            out << "iterations: " << sol.iterations << '\n';
            if (problem.has_constraint()) {
                out << "normality: "
                    << (classify_normality(problem, sol) == Normality::normal ? "normal" : "abnormal") << '\n';
            }
            with_output(out_path, out, [&](std::ostream& o) { write_solution_csv(o, sol); });
            if (!sol.converged) {
                err << "tscv: solver did not converge (" << sol.message << ")\n";
                return exit_numeric;
            }
            return exit_ok;
        }

        if (oracle_cmd->parsed()) {
            std::vector<double> grid(values);
            for (std::size_t k = 0; k < values; ++k) {
                grid[k] = values == 1 ? lo : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(values - 1);
            }
            const auto coords = free_coordinates(problem);
            const OracleResult r =
                brute_force_oracle(problem, std::vector<std::vector<double>>(coords.size(), grid), slack);
            Solution sol(problem.scale());
            const Trajectory traj(problem, r.y);
            sol.y = traj.y();
            sol.z = traj.z();
            out << "objective: " << format_double(r.objective) << '\n';
            if (r.constraint) out << "constraint_value: " << format_double(*r.constraint) << '\n';
            out << "candidates: " << r.candidates << '\n';
            with_output(out_path, out, [&](std::ostream& o) { write_solution_csv(o, sol); });
            return exit_ok;
        }

        // residual and check
        const Trajectory traj(problem, read_trajectory_csv(y_path, problem.scale()));
        const Multipliers m = multipliers_for(problem, traj, lam0, lam);
        const ResidualReport report = el_residual(problem, traj, m);
        if (residual_cmd->parsed()) {
            with_output(out_path, out, [&](std::ostream& o) { write_report_csv(o, report); });
            return exit_ok;
        }
        const double limit = tol > 0 ? tol : 1e-6;
        bool pass = report.max_abs <= limit;
        for (const auto& b : {report.boundary_left, report.boundary_right}) {
            if (b && !(std::abs(*b) <= limit)) pass = false;
        }
        out << "lam0: " << format_double(m.lam0) << '\n';
        if (problem.has_constraint()) out << "lam: " << format_double(m.lam) << '\n';
        print_report_summary(out, report);
        out << (pass ? "PASS" : "FAIL") << '\n';
        return pass ? exit_ok : exit_check_failed;
    } catch (const Error& e) {
        err << "tscv: " << to_string(e.code()) << ": " << e.what() << '\n';
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        err << "tscv: " << e.what() << '\n';
        return exit_usage;
    }
}

}  // namespace tscv
