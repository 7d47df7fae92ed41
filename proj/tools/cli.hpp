#pragma once

#include <iosfwd>

namespace anisosplit::cli {

/// Entry point of the anisosplit command line tool. Returns 0 on success,
/// 1 when a check or precondition fails, 2 on usage or config errors.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace anisosplit::cli
