// Copyright 2026 The cloud-inspect Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cloud_inspect {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or unsupported PLY input. `offset()` is the byte position in the
/// stream at which the problem was detected.
class PlyError : public Error {
 public:
  PlyError(const std::string& message, std::size_t offset)
      : Error(message + " (at byte " + std::to_string(offset) + ")"),
        reason_(message),
        offset_(offset) {}

  const std::string& reason() const noexcept { return reason_; }
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::string reason_;
  std::size_t offset_;
};

/// Raised by ICP when fewer than three correspondences survive the distance
/// bound.
class CorrespondenceStarvation : public Error {
 public:
  explicit CorrespondenceStarvation(int iteration)
      : Error("correspondence starvation at iteration " +
              std::to_string(iteration)),
        iteration_(iteration) {}

  int iteration() const noexcept { return iteration_; }

 private:
  int iteration_;
};

}  // namespace cloud_inspect
