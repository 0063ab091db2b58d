// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mmrank Authors

#pragma once

#include <iosfwd>

namespace mmrank {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;
inline constexpr int kExitNumerical = 2;

/// Entry point of the `mmrank` binary. Data goes to `out` and files; logs to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mmrank
