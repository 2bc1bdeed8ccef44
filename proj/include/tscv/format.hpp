#pragma once

#include <string>

namespace tscv {

/// 17 significant digits, so the text round-trips to the same double.
std::string format_double(double value);

/// Shortest text that round-trips to the same double.
std::string format_shortest(double value);

}  // namespace tscv
