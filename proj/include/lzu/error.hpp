// Copyright 2026 The lzu Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace lzu {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (bad dimensions, nonpositive
/// parameters, degenerate tiles, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Input data failed validation (negative saliency, malformed file, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// The attraction kernel collected zero saliency mass at some control point.
class DegenerateSaliency : public Error {
 public:
  using Error::Error;
};

/// A warp lost monotonicity or produced a degenerate tile.
class FoldoverError : public Error {
 public:
  using Error::Error;
};

/// Two tiles claimed the same output point with different preimages.
class InjectivityError : public Error {
 public:
  using Error::Error;
};

/// A reduction ran over an empty set of points.
class EmptyDomain : public Error {
 public:
  using Error::Error;
};

}  // namespace lzu
