#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cssr {

// Caller broke a documented precondition (shape mismatch, wrong color space).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A configuration value is outside its valid domain.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Input data could not be used (unreadable image, image too small, ...).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : DataError(what + " at byte offset " + std::to_string(offset)),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class ImageTooSmallError : public DataError {
 public:
  using DataError::DataError;
};

class MetricError : public DataError {
 public:
  using DataError::DataError;
};

// The feedback iteration blew up (residual grew past the guard or went
// non-finite).
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class BackendErrorKind {
  Handshake,
  Timeout,
  Broken,    // process exited or a pipe closed
  Protocol,  // malformed or unexpected frame
  Remote,    // server answered with an ERROR frame
  Shape,     // response dimensions do not match the request
  Rejected,  // request refused client-side before sending
};

class BackendError : public std::runtime_error {
 public:
  BackendError(BackendErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  BackendErrorKind kind() const noexcept { return kind_; }

 private:
  BackendErrorKind kind_;
};

}  // namespace cssr
