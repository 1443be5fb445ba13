#pragma once

#include <stdexcept>
#include <string>

namespace s2v {

/// Raised for invalid inputs, malformed files and I/O failures.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw Error(message);
}

}  // namespace s2v
