#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ncert {

// Static block partition of [0, n) over `workers` threads; fn(begin, end, w).
// workers <= 1 runs inline. The first exception thrown by a worker is
// rethrown on the calling thread.
template <class Fn>
void parallel_for(size_t n, int workers, Fn&& fn) {
    if (workers <= 1 || n < 2) {
        fn(size_t{0}, n, 0);
        return;
    }
    const size_t w = std::min<size_t>(static_cast<size_t>(workers), n);
    std::vector<std::thread> pool;
    std::exception_ptr err;
    std::mutex mu;
    for (size_t t = 0; t < w; ++t) {
        size_t b = n * t / w, e = n * (t + 1) / w;
        pool.emplace_back([&, b, e, t] {
            try {
                fn(b, e, static_cast<int>(t));
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!err) err = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

inline int default_workers() {
    unsigned h = std::thread::hardware_concurrency();
    return h == 0 ? 1 : static_cast<int>(h);
}

}  // namespace ncert
