#pragma once

#include <stdexcept>
#include <string>

namespace pivotcap {

// All recoverable failures (shape mismatches, bad files, invalid config)
// surface as this type so callers can catch one thing at the CLI boundary.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace pivotcap
