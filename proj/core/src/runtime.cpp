// Copyright 2026 The rgbt Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "rgbt/runtime.hpp"

#include <cstdlib>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace rgbt {

void tune_allocator() {
#if defined(__GLIBC__)
  // Grow the heap in large steps; this also disables the dynamic mmap
  // threshold, so big tensors are served from the already-faulted heap.
  mallopt(M_TOP_PAD, 256 << 20);
#endif
}

}  // namespace rgbt
