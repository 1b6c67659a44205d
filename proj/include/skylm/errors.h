// Copyright 2026 The skylm Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace skylm {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A precondition on an argument value was violated.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// Two images or an image and a transport matrix disagree on geometry.
class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

// Image / cache file errors. Each failure mode is its own type so callers
// can tell a bad header from a short file.
class IoError : public Error {
 public:
  using Error::Error;
};
class MalformedHeader : public IoError {
 public:
  using IoError::IoError;
};
class TruncatedPayload : public IoError {
 public:
  using IoError::IoError;
};
class UnsupportedFormat : public IoError {
 public:
  using IoError::IoError;
};
class ValidationError : public IoError {
 public:
  using IoError::IoError;
};

}  // namespace skylm
