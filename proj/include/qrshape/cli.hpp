#pragma once

#include <iosfwd>

namespace qrshape {

inline constexpr int kJsonSchemaVersion = 1;

/// Exit codes: 0 success, 1 numerical non-convergence or failed verification,
/// 2 I/O, parse or usage error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace qrshape
