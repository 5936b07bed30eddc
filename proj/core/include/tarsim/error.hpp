#pragma once

#include <stdexcept>
#include <string>

namespace tarsim {

/// Thrown for invalid input files, violated preconditions and failed runs.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tarsim
