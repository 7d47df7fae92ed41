#include "anisosplit/parallel.hpp"

#include <omp.h>

#include <cstdlib>
#include <string>

namespace anisosplit {

int max_threads() {
    static const int n = [] {
        if (const char* env = std::getenv("ANISOSPLIT_THREADS")) {
            try {
                const int v = std::stoi(env);
                if (v > 0) return v;
            } catch (const std::exception&) {
            }
        }
        return omp_get_max_threads();
    }();
    return n;
}

}  // namespace anisosplit
