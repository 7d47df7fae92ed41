#pragma once

namespace anisosplit {

/// Thread cap for parallel loops: ANISOSPLIT_THREADS if set, otherwise the
/// OpenMP default.
int max_threads();

}  // namespace anisosplit
