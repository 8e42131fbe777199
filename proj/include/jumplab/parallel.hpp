#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace jumplab {

/// Samples per reduction block. Results depend on this constant, never on the
/// number of workers.
inline constexpr std::size_t kReductionBlock = 2048;

inline unsigned resolve_workers(unsigned requested) {
    if (requested != 0) {
        return requested;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs `body(i, acc)` for i in [0, n) and reduces the per-block accumulators
/// with a fixed pairwise tree, so the result is bit-identical for any worker
/// count. `Acc` must be copyable and provide `merge(const Acc&)`.
template <class Acc, class Body>
Acc parallel_reduce(std::size_t n, unsigned workers, const Acc& identity, Body&& body) {
    const std::size_t blocks = (n + kReductionBlock - 1) / kReductionBlock;
    std::vector<Acc> partial(blocks, identity);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto worker = [&] {
        try {
            for (std::size_t b = next.fetch_add(1); b < blocks; b = next.fetch_add(1)) {
                const std::size_t begin = b * kReductionBlock;
                const std::size_t end = std::min(n, begin + kReductionBlock);
                Acc& acc = partial[b];
                for (std::size_t i = begin; i < end; ++i) {
                    body(i, acc);
                }
            }
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) {
                failure = std::current_exception();
            }
            next.store(blocks);
        }
    };

    const unsigned count = std::min<std::size_t>(resolve_workers(workers), std::max<std::size_t>(blocks, 1));
    if (count <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(count);
        for (unsigned w = 0; w < count; ++w) {
            pool.emplace_back(worker);
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
    if (blocks == 0) {
        return identity;
    }
    for (std::size_t stride = 1; stride < blocks; stride *= 2) {
        for (std::size_t i = 0; i + stride < blocks; i += 2 * stride) {
            partial[i].merge(partial[i + stride]);
        }
    }
    return std::move(partial[0]);
}

/// Runs `body(i)` for i in [0, n) across workers; `body` writes to disjoint slots.
template <class Body>
void parallel_for(std::size_t n, unsigned workers, Body&& body) {
    struct Nothing {
        void merge(const Nothing&) {}
    };
    parallel_reduce(n, workers, Nothing{}, [&](std::size_t i, Nothing&) { body(i); });
}

}  // namespace jumplab
