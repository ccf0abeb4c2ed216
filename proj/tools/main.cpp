// Copyright 2026 The lzu Authors
// SPDX-License-Identifier: Apache-2.0

#include "commands.hpp"

#include <iostream>

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return lzu::cli::run(args, std::cout, std::cerr);
}
