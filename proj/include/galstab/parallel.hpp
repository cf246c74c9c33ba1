#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace galstab {

namespace detail {
inline std::atomic<unsigned>& thread_count_storage()
{
    static std::atomic<unsigned> n{std::max(1u, std::thread::hardware_concurrency())};
    return n;
}
} // namespace detail

inline void set_thread_count(unsigned n) { detail::thread_count_storage() = std::max(1u, n); }
inline unsigned thread_count() { return detail::thread_count_storage(); }

/// Fixed work-chunk size. Reductions sum per-chunk partials in chunk order,
/// so results are bit-identical for any thread count.
inline constexpr std::size_t kChunk = 2048;

/// Calls body(begin, end) over [0, n) split into kChunk-sized blocks.
template <class Body>
void parallel_for(std::size_t n, Body&& body)
{
    const std::size_t chunks = (n + kChunk - 1) / kChunk;
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(thread_count(), chunks));
    if (workers <= 1) {
        for (std::size_t c = 0; c < chunks; ++c)
            body(c * kChunk, std::min(n, (c + 1) * kChunk));
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t c = next++; c < chunks; c = next++)
            body(c * kChunk, std::min(n, (c + 1) * kChunk));
    };
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (unsigned t = 1; t < workers; ++t)
        pool.emplace_back(worker);
    worker();
}

/// Deterministic sum of term(i) for i in [0, n).
template <class Term>
double parallel_sum(std::size_t n, Term&& term)
{
    const std::size_t chunks = (n + kChunk - 1) / kChunk;
    std::vector<double> partial(chunks, 0.0);
    parallel_for(n, [&](std::size_t b, std::size_t e) {
        double s = 0.0;
        for (std::size_t i = b; i < e; ++i)
            s += term(i);
        partial[b / kChunk] = s;
    });
    double total = 0.0;
    for (double p : partial)
        total += p;
    return total;
}

} // namespace galstab
