#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace pulsecancel {

enum class ErrorCode {
  InvalidArgument,  // caller violated a precondition
  InvalidData,      // input data is malformed or out of range
  Io,               // file could not be opened, read or written
  Numerical,        // rank deficiency or similar numerical failure
  NoTarget,         // range gate holds no target energy
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised when a binary file is shorter or longer than its declared layout.
class SizeMismatchError : public Error {
 public:
  SizeMismatchError(const std::string& path, std::uintmax_t expected, std::uintmax_t actual);
  std::uintmax_t expected_bytes() const noexcept { return expected_; }
  std::uintmax_t actual_bytes() const noexcept { return actual_; }

 private:
  std::uintmax_t expected_;
  std::uintmax_t actual_;
};

/// Raised while parsing a CSV; carries the 1-based data row that failed.
class RowError : public Error {
 public:
  RowError(std::size_t row, const std::string& what);
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

}  // namespace pulsecancel
