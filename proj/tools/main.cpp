// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mmrank Authors

#include "mmrank/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return mmrank::run_cli(argc, argv, std::cout, std::cerr); }
