#pragma once

#include <cstddef>
#include <utility>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tandem::par {

inline bool openmp_enabled() {
#ifdef _OPENMP
    return true;
#else
    return false;
#endif
}

inline int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

/// Runs f(begin, end, block_index) over [0, n) split into fixed-size blocks.
/// The block structure depends only on (n, block_size), never on the thread
/// count, so any reduction that combines per-block results in block order is
/// bit-identical between the serial and OpenMP paths.
template <class F>
void for_blocks(std::size_t n, std::size_t block_size, bool parallel, F&& f) {
    if (n == 0) return;
    const std::size_t n_blocks = (n + block_size - 1) / block_size;
#ifdef _OPENMP
    if (parallel && n_blocks > 1) {
#pragma omp parallel for schedule(static)
        for (long long b = 0; b < static_cast<long long>(n_blocks); ++b) {
            const std::size_t begin = static_cast<std::size_t>(b) * block_size;
            const std::size_t end = begin + block_size < n ? begin + block_size : n;
            f(begin, end, static_cast<std::size_t>(b));
        }
        return;
    }
#else
    (void)parallel;
#endif
    for (std::size_t b = 0; b < n_blocks; ++b) {
        const std::size_t begin = b * block_size;
        const std::size_t end = begin + block_size < n ? begin + block_size : n;
        f(begin, end, b);
    }
}

}  // namespace tandem::par
