#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "tscv/euler_lagrange.hpp"
#include "tscv/problem.hpp"

namespace tscv {

struct SolveOptions {
    double tol_grad = 1e-9;
    std::size_t max_iter = 500;
    double tol_con = 1e-8;
    std::size_t max_outer = 40;
    /// Relative tolerance used when certifying the result.
    double tol_residual = 1e-6;
    /// Relative step of the central differences in gradient().
    double fd_step = 1e-6;
};

enum class SolveStatus { converged, max_iterations, line_search_failure, stagnation };

const char* to_string(SolveStatus status);

struct Functionals {
    double objective = 0.0;
    std::optional<double> constraint;
};

struct Gradient {
    /// Scale indices of the free values, ascending.
    std::vector<std::size_t> coordinates;
    std::vector<double> objective;
    std::optional<std::vector<double>> constraint;
};

struct Solution {
    explicit Solution(const TimeScale& scale) : y(scale), z(scale), report(scale) {}

    GridFunction y;
    GridFunction z;
    double objective = 0.0;
    std::optional<double> constraint_value;
    double lam0 = 1.0;
    std::optional<double> lam;
    ResidualReport report;
    std::size_t iterations = 0;
    bool converged = false;
    SolveStatus status = SolveStatus::max_iterations;
    double grad_norm = 0.0;
    std::string message;
};

enum class Normality { normal, abnormal };

/// Cauchy sums of L and F along y (which must cover the problem's index range).
///   delta: sum over [a, b) of mu * L(t, y^sigma, y^Delta, z)
///   nabla: sum over (a, b] of nu * L(t, y^rho, y^nabla, z)
Functionals evaluate_functionals(const Problem& problem, const GridFunction& y);

/// Values the optimizer may move: interior points and free endpoints. The
/// extra point beyond a free end is excluded since no functional depends on it.
std::vector<std::size_t> free_coordinates(const Problem& problem);

/// Central differences of evaluate_functionals with step fd_step * max(1, |y_i|)
/// per free coordinate.
Gradient gradient(const Problem& problem, const GridFunction& y, double fd_step = 1e-6);

/// Chooses the extra point beyond the free endpoint so that the natural
/// boundary residual vanishes. Returns y unchanged when no extra point exists.
GridFunction complete_extra_point(const Problem& problem, GridFunction y, Multipliers m = {});

/// BFGS with Armijo backtracking on the transcribed functional. Requires no constraint.
Solution solve_unconstrained(const Problem& problem, const SolveOptions& opts = {},
                             std::optional<GridFunction> y0 = std::nullopt);

/// Augmented Lagrangian outer loop on c(y) = F_value - gamma with BFGS inner solves.
Solution solve_isoperimetric(const Problem& problem, const SolveOptions& opts = {},
                             std::optional<GridFunction> y0 = std::nullopt);

/// Dispatches on the presence of a constraint.
Solution solve(const Problem& problem, const SolveOptions& opts = {},
               std::optional<GridFunction> y0 = std::nullopt);

/// Abnormal iff the solution is itself an extremal of the constraint functional.
Normality classify_normality(const Problem& problem, const Solution& solution, double rel_tol = 1e-6);

struct OracleResult {
    explicit OracleResult(const TimeScale& scale) : y(scale) {}

    GridFunction y;
    double objective = 0.0;
    std::optional<double> constraint;
    std::size_t candidates = 0;
};

/// Exhaustive search over per-coordinate value lists (one list per entry of
/// free_coordinates()). With a constraint only candidates with
/// |F_value - gamma| <= slack are kept. Ties go to the lexicographically
/// smallest candidate.
OracleResult brute_force_oracle(const Problem& problem, const std::vector<std::vector<double>>& grid,
                                double slack = 0.0, std::size_t max_candidates = 20'000'000);

}  // namespace tscv
