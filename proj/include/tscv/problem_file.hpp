#pragma once

#include <filesystem>
#include <iosfwd>
#include <string_view>

#include "tscv/problem.hpp"

namespace tscv {

/// Reads a problem file. Syntax errors and unknown keys raise ParseError, a
/// spec violating validate() raises ValidationError; both carry line numbers.
/// A relative [scale] path is resolved against the file's directory.
ProblemSpec load_config(const std::filesystem::path& path);

/// Same as load_config on in-memory text; `origin` names the source in messages.
ProblemSpec parse_config(std::string_view text, const std::filesystem::path& base_dir = ".",
                         std::string_view origin = "<input>");

/// Writes `spec` in problem-file syntax with an explicit point list.
void write_config(std::ostream& out, const ProblemSpec& spec);

}  // namespace tscv
