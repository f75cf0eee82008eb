#pragma once

#include <iosfwd>

namespace assgd {

/// Exit codes: 0 success, 1 runtime/numeric failure or failed check,
/// 2 usage or configuration error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace assgd
