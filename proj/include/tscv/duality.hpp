#pragma once

#include "tscv/euler_lagrange.hpp"
#include "tscv/problem.hpp"

namespace tscv {

/// A delta problem and its nabla counterpart on the reflected scale. Point t of
/// the primal corresponds to -t of the dual, scale index i to n - 1 - i.
struct DualPair {
    ProblemSpec primal;
    ProblemSpec dual;
};

/// Points negated and re-sorted ascending.
TimeScale dualize_scale(const TimeScale& scale);

/// Reflects a problem onto the negated scale and switches flavor.
///
/// Under t -> -t the shifted value y^sigma becomes y^rho and y^Delta becomes
/// -y^nabla, so L*(t, y, v) = L(-t, y, -v) and likewise for g and F. The running
/// integral reverses direction: z(t) = Z - z*(-t) with Z = z(b). This is only
/// expressible when L (and F) are affine in z with a coefficient k(t) that
/// depends on t alone; then
///   L*(t, y, v, z) = L0(-t, y, -v) + K g(-t, y, -v) - k(-t) z,   K = int_a^b k.
/// Throws NotDualizable otherwise.
ProblemSpec dualize_problem(const ProblemSpec& spec);

/// Pairs a delta spec with its dual. Throws FlavorMismatch for a nabla spec.
DualPair make_dual_pair(const ProblemSpec& primal);

/// y*(-t) := y(t) on the reflected scale.
GridFunction reflect(const GridFunction& y, const TimeScale& reflected);

/// max over matched points of |R(t) - R*(-t)| together with the natural
/// boundary residuals (N_a = -N*_{-a}, N_b = -N*_{-b}), divided by 1 + max |R|.
/// Throws FlavorMismatch unless primal is delta and dual nabla, ScaleMismatch
/// unless the dual scale is the reflection of the primal one.
double duality_check(const DualPair& pair, const GridFunction& y, Multipliers m = {});

}  // namespace tscv
