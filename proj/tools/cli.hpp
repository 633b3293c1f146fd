// Copyright 2026 The rgbt Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>

namespace rgbt::cli {

enum ExitCode { kOk = 0, kRuntimeError = 1, kUsageError = 2 };

/// Entry point shared by the `rgbt` binary and the tests. The environment
/// variable RGBT_SEED, when set, overrides the synth and train seeds.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rgbt::cli
