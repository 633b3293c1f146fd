// Copyright 2026 The rgbt Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace rgbt {

/// Keeps large activation buffers on the heap instead of returning them to
/// the kernel after every step. Training allocates and frees the same large
/// tensors each batch; with default glibc settings each one is a fresh mmap
/// and page-faults on first touch. No-op on other C libraries.
void tune_allocator();

}  // namespace rgbt
