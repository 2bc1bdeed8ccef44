#pragma once

#include <filesystem>
#include <iosfwd>

#include "tscv/euler_lagrange.hpp"
#include "tscv/solver.hpp"

namespace tscv {

/// Header "t,y,z" and one row per trajectory point.
void write_solution_csv(std::ostream& out, const Solution& solution);
/// Summary rows prefixed '#', then "t,residual" and the pointwise residuals.
void write_report_csv(std::ostream& out, const ResidualReport& report);

/// File variants; throw IoError when the path cannot be written.
void emit_csv(const Solution& solution, const std::filesystem::path& path);
void emit_csv(const ResidualReport& report, const std::filesystem::path& path);

/// Reads columns t and y (others ignored, '#' lines skipped) into a function
/// on `scale`. The times must be consecutive scale points.
GridFunction read_trajectory_csv(std::istream& in, const TimeScale& scale);
GridFunction read_trajectory_csv(const std::filesystem::path& path, const TimeScale& scale);

}  // namespace tscv
