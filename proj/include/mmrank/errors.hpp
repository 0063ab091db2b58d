// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mmrank Authors

#pragma once

#include <stdexcept>

namespace mmrank {

/// Malformed, missing or inconsistent input. The CLI maps it to exit code 1.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A non-finite loss or parameter during training. The CLI maps it to exit code 2.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mmrank
