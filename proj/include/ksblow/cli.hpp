#pragma once

// Command-line front end: constants, classify, simulate, kernel, verify.
// Exit codes: 0 success, 1 domain/validation error, 2 numerical failure,
// 3 acceptance failure.

#include <ostream>

namespace ksblow {

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace ksblow
