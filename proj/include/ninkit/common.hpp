// Copyright 2026 The ninkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef NINKIT_COMMON_HPP_
#define NINKIT_COMMON_HPP_

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

// The core library is compiled twice: a 32-bit build for training and a
// 64-bit build for gradient checks. Each build lives in its own inline
// namespace so the two can never be silently mixed at link time.
#if defined(NINKIT_REAL_DOUBLE) && NINKIT_REAL_DOUBLE
#define NINKIT_BEGIN_NAMESPACE \
  namespace ninkit {           \
  inline namespace f64 {
#else
#define NINKIT_BEGIN_NAMESPACE \
  namespace ninkit {           \
  inline namespace f32 {
#endif
#define NINKIT_END_NAMESPACE \
  }                          \
  }

NINKIT_BEGIN_NAMESPACE

#if defined(NINKIT_REAL_DOUBLE) && NINKIT_REAL_DOUBLE
using Real = double;
#else
using Real = float;
#endif

inline constexpr bool kRealIsDouble = sizeof(Real) == 8;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor dimensions or layer wiring do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A network config file is malformed. Carries the 1-based line number
/// (0 when the problem is not tied to one line).
class ConfigError : public Error {
 public:
  ConfigError(std::size_t line, const std::string& what)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line),
        detail_(what) {}
  std::size_t line() const { return line_; }
  /// The message without the line prefix.
  const std::string& detail() const { return detail_; }

 private:
  std::size_t line_;
  std::string detail_;
};

/// Dataset or checkpoint files are unreadable, truncated, or inconsistent.
class DataError : public Error {
 public:
  using Error::Error;
};

/// A precondition on a numeric argument was violated (std <= 0, ratio >= 1).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

NINKIT_END_NAMESPACE

#endif  // NINKIT_COMMON_HPP_
