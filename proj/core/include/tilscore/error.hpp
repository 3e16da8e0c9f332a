// Copyright 2026 The tilscore Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/// @file error.hpp
/// @brief Exception hierarchy shared by every tilscore module.
///
/// All recoverable failures are reported as subclasses of tilscore::Error.
/// Degenerate-but-valid situations (empty tissue, fallback bulk, ...) are not
/// errors; they are reported through warning flags on the returned values.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tilscore {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input failed validation (bad config value, unpaired files, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class EmptyRasterError : public Error {
 public:
  using Error::Error;
};

class OutOfBoundsError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed PNG stream. `offset()` is the byte position of the first bad
/// structure (signature, chunk header, CRC, or compressed data).
class DecodeError : public IoError {
 public:
  DecodeError(const std::string& what, std::size_t offset)
      : IoError(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class InvalidAnnotationError : public ValidationError {
 public:
  InvalidAnnotationError(int x, int y, int value)
      : ValidationError("invalid annotation label " + std::to_string(value) + " at pixel (" +
                        std::to_string(x) + ", " + std::to_string(y) + ")"),
        x_(x),
        y_(y) {}

  int x() const noexcept { return x_; }
  int y() const noexcept { return y_; }

 private:
  int x_;
  int y_;
};

class IncompleteStitchError : public Error {
 public:
  explicit IncompleteStitchError(std::vector<std::pair<int, int>> missing)
      : Error(describe(missing)), missing_(std::move(missing)) {}

  const std::vector<std::pair<int, int>>& missing_origins() const noexcept { return missing_; }

 private:
  static std::string describe(const std::vector<std::pair<int, int>>& missing) {
    std::string msg = "incomplete stitch: missing " + std::to_string(missing.size()) + " window(s):";
    for (const auto& [x, y] : missing) {
      msg += " (" + std::to_string(x) + "," + std::to_string(y) + ")";
    }
    return msg;
  }

  std::vector<std::pair<int, int>> missing_;
};

/// A metric is undefined for the given input (zero variance, no comparable
/// pairs, no ground truth, ...).
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

/// Cox fit diverged: the partial likelihood is monotone in beta.
class DivergingBetaError : public Error {
 public:
  using Error::Error;
};

}  // namespace tilscore
