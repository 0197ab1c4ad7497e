#pragma once

#include <string>

namespace ksblow {

/// Shortest decimal that round-trips to the same double ("inf", "-inf",
/// "nan" for non-finite values).
std::string fmt(double x);

}  // namespace ksblow
