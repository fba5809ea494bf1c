#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dgn {

// Malformed or truncated file; offset points at the failing byte.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace dgn
