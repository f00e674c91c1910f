// Copyright 2026 The bevkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>

namespace bevkit {

/// Worker cap from BEVKIT_THREADS (positive integer); defaults to the
/// hardware concurrency. Read on every call.
int worker_count();

/// Runs body(begin, end) over contiguous chunks of [0, n). Chunks are
/// disjoint, so bodies that only write their own range produce results
/// independent of the worker count.
void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace bevkit
