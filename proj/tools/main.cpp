// Copyright 2026 The rgbt Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "cli.hpp"
#include "rgbt/runtime.hpp"

int main(int argc, char** argv) {
  rgbt::tune_allocator();
  return rgbt::cli::run(argc, argv, std::cout, std::cerr);
}
