#include "tsar/parallel.hpp"

#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tsar {

namespace {

int read_thread_cap() {
#ifdef _OPENMP
    int fallback = omp_get_max_threads();
#else
    int fallback = 1;
#endif
    const char* env = std::getenv("TSAR_THREADS");
    if (env == nullptr) return fallback;
    try {
        int n = std::stoi(env);
        if (n >= 1) return n;
    } catch (const std::exception&) {
    }
    return fallback;
}

}  // namespace

int max_threads() {
    static const int cap = read_thread_cap();
    return cap;
}

}  // namespace tsar
