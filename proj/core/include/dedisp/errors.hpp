#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dedisp {

/// Requested sizing exceeds a configured cap, or sizing arithmetic overflows.
class capacity_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed, truncated, or unsupported input data. Carries the byte offset
/// at which parsing stopped.
class format_error : public std::runtime_error {
 public:
  format_error(const std::string& what, std::size_t byte_offset)
      : std::runtime_error(what + " (at byte " + std::to_string(byte_offset) + ")"),
        byte_offset_(byte_offset) {}

  std::size_t byte_offset() const noexcept { return byte_offset_; }

 private:
  std::size_t byte_offset_;
};

/// A measured pass takes one second or more per second of data, so real-time
/// deployment sizing has no solution.
class not_real_time_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dedisp
