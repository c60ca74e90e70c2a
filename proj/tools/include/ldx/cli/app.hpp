#pragma once

#include <iosfwd>

namespace ldx::cli {

/// Runs one command. Returns the process exit code:
/// 0 success, 2 config/parse, 3 range/model, 4 numerical, 5 scale.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ldx::cli
