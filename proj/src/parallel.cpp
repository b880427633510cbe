#include "afem/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace afem {

namespace {

int initial_worker_count() {
    int n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    if (const char* env = std::getenv("FRACTURE_AFEM_THREADS")) {
        try {
            const int cap = std::stoi(env);
            if (cap >= 1) n = std::min(n, cap);
        } catch (const std::exception&) {
            // unparsable value: keep the hardware count
        }
    }
    return n;
}

std::atomic<int>& workers() {
    static std::atomic<int> n{initial_worker_count()};
    return n;
}

} // namespace

int worker_count() { return workers().load(); }

void set_worker_count(int n) { workers().store(std::max(1, n)); }

void parallel_for(std::size_t n, std::size_t min_chunk,
                  const std::function<void(std::size_t, std::size_t)>& body) {
    const auto threads = static_cast<std::size_t>(worker_count());
    if (threads <= 1 || n < 2 * min_chunk) {
        body(0, n);
        return;
    }
    const std::size_t chunks = std::min(threads, n / min_chunk);
    const std::size_t step = (n + chunks - 1) / chunks;
    std::vector<std::jthread> pool;
    pool.reserve(chunks - 1);
    for (std::size_t c = 1; c < chunks; ++c) {
        const std::size_t b = c * step;
        const std::size_t e = std::min(n, b + step);
        if (b < e) pool.emplace_back([&body, b, e] { body(b, e); });
    }
    body(0, std::min(n, step));
}

} // namespace afem
