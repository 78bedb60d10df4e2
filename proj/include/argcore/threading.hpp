// Copyright (C) 2026 the argcore authors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <cstddef>
#include <functional>

namespace argcore {

// Worker cap taken from the ARG_CORE_THREADS environment variable.
// Defaults to 1 so baseline runs are single-threaded and bit-exact.
int thread_cap();

// Runs fn(i) for i in [0, n). With thread_cap() > 1 the index range is split
// into contiguous chunks, one thread per chunk; fn must write only to
// per-index slots. Results are identical to the serial order by construction.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace argcore
