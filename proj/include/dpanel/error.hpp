#pragma once

#include <stdexcept>
#include <string>

namespace dpanel {

// Malformed input, unreadable files, bad arguments.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical or identification failure while fitting or testing a model.
class EstimationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dpanel
