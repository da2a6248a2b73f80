#pragma once

#include <stdexcept>
#include <string>

namespace peerperm {

/// Invalid input: malformed data, inconsistent designs, degenerate statistics.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A computational guard (enumeration size, rejection attempt cap) was exceeded.
class GuardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace peerperm
