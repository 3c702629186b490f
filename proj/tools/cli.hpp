#pragma once

#include <ostream>

namespace gdi::cli {

/// Entry point shared by the executable and the tests. Returns the exit
/// code: 0 on success, 1 on a runtime error, 2 on a usage error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gdi::cli
