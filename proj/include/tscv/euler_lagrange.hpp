#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "tscv/problem.hpp"

namespace tscv {

/// (lam0, lam) in H = lam0 * L - lam * F. Without a constraint only lam0 matters.
struct Multipliers {
    double lam0 = 1.0;
    double lam = 0.0;
};

/// Euler-Lagrange residuals of one trajectory.
///
/// Pointwise residuals live on the points t whose neighbour in the derivative
/// direction still has a well-defined integrand state: [a, rho(b)) for the delta
/// flavor and (sigma(a), b] for the nabla flavor, widened by one point when the
/// trajectory carries the extra point beyond the free endpoint. The residual at
/// the dropped point depends on y outside [a, b] and is not a necessary
/// condition on a finite scale.
struct ResidualReport {
    explicit ResidualReport(const TimeScale& scale) : pointwise(scale), integral_form(scale) {}

    GridFunction pointwise;
    double max_abs = 0.0;
    std::optional<double> boundary_left;
    std::optional<double> boundary_right;
    /// Q(t) = d3H + d3g * I + int_t^b (d2H + d2g * I); constant along extremals.
    GridFunction integral_form;
    double integral_form_deviation = 0.0;
    Multipliers multipliers;
    /// max |d2H| over the residual domain; sets the certification scale.
    double d2h_scale = 0.0;

    /// max_abs <= rel_tol * (1 + d2h_scale) and every boundary residual below the same bound.
    bool satisfied(double rel_tol = 1e-6) const;
};

/// I(t) = int_{sigma(t)}^b d4H dtau (delta) or int_{rho(t)}^b d4H nabla tau (nabla),
/// on the problem's state range.
GridFunction inner_integral(const Problem& problem, const Trajectory& y, Multipliers m = {});

/// Differential form of the Euler-Lagrange equation for H, plus the integral
/// form and the natural boundary residuals of free endpoints.
ResidualReport el_residual(const Problem& problem, const Trajectory& y, Multipliers m = {});

/// Same computation; `pointwise` holds Q - mean(Q) and max_abs equals
/// integral_form_deviation.
ResidualReport el_residual_integral_form(const Problem& problem, const Trajectory& y, Multipliers m = {});

/// Natural boundary residuals d3H + d3g * I at each free endpoint. Both calculi
/// reduce to this form:
///   delta left  d3L(a) + d3g(a) int_{sigma(a)}^b d4L,
///   delta right d3L(b) - d3g(b) int_b^{sigma(b)} d4L,
///   nabla left  d3L(a) + d3g(a) int_{rho(a)}^b d4L,
///   nabla right d3L(b) + d3g(b) int_{rho(b)}^b d4L.
/// Throws EndpointNotFree when neither end is free.
std::pair<std::optional<double>, std::optional<double>> natural_boundary_residuals(
    const Problem& problem, const Trajectory& y, Multipliers m = {});

enum class QuantumKind { h_calculus, q_calculus };

/// Euler-Lagrange residual written with the h-difference (T = hZ) or the
/// q-difference (T = q^N0) operators, evaluated from closed-form points and
/// graininess rather than the scale's jump operators. Sums carry the
/// graininess weight h (resp. (q - 1) tau).
GridFunction corollary_residual(const Problem& problem, const Trajectory& y, Multipliers m, QuantumKind kind);

/// Pairings int_a^b f eta_j^sigma Delta t against the unit variations eta_j
/// (1 at interior point j, 0 elsewhere), for j = ia+1 .. ib-1.
std::vector<double> variation_pairings(const GridFunction& f, std::size_t ia, std::size_t ib);

/// Least-squares lam for lam0 = 1 from the residuals of L and F.
double estimate_multiplier(const Problem& problem, const Trajectory& y);

}  // namespace tscv
