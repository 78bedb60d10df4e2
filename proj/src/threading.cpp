// Copyright (C) 2026 the argcore authors
// SPDX-License-Identifier: Apache-2.0
//
#include "argcore/threading.hpp"

#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace argcore {

int thread_cap() {
    const char* env = std::getenv("ARG_CORE_THREADS");
    if (env == nullptr || *env == '\0') return 1;
    try {
        const int n = std::stoi(env);
        return n < 1 ? 1 : n;
    } catch (...) {
        return 1;
    }
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = static_cast<std::size_t>(thread_cap());
    if (workers <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const std::size_t used = workers < n ? workers : n;
    const std::size_t chunk = (n + used - 1) / used;
    std::vector<std::thread> pool;
    pool.reserve(used);
    for (std::size_t w = 0; w < used; ++w) {
        const std::size_t lo = w * chunk;
        const std::size_t hi = lo + chunk < n ? lo + chunk : n;
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace argcore
