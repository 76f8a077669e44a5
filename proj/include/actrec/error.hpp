#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace actrec {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid shapes, hyperparameters, flags or fold requests.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Bad input data: labels out of range, empty boxes, inconsistent frames.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Malformed binary or text file. Carries the byte offset of the problem.
class FormatError : public DataError {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : DataError(what + " (at byte " + std::to_string(offset) + ")"), detail_(what), offset_(offset) {}
  std::uint64_t offset() const noexcept { return offset_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::string detail_;
  std::uint64_t offset_;
};

/// A NaN or Inf appeared in a forward or backward pass.
class NumericError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

class CheckpointError : public Error {
 public:
  using Error::Error;
};

class StreamError : public Error {
 public:
  using Error::Error;
};

class MetricsError : public Error {
 public:
  using Error::Error;
};

}  // namespace actrec
