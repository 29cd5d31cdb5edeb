#include "pulsecancel/error.hpp"

#include <fmt/format.h>

namespace pulsecancel {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid argument";
    case ErrorCode::InvalidData: return "invalid data";
    case ErrorCode::Io: return "i/o error";
    case ErrorCode::Numerical: return "numerical error";
    case ErrorCode::NoTarget: return "no target";
  }
  return "unknown";
}

SizeMismatchError::SizeMismatchError(const std::string& path, std::uintmax_t expected, std::uintmax_t actual)
    : Error(ErrorCode::InvalidData,
            fmt::format("{}: expected {} bytes, found {} bytes", path, expected, actual)),
      expected_(expected),
      actual_(actual) {}

RowError::RowError(std::size_t row, const std::string& what)
    : Error(ErrorCode::InvalidData, fmt::format("row {}: {}", row, what)), row_(row) {}

}  // namespace pulsecancel
