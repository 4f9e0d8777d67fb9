#pragma once

#include <stdexcept>
#include <string>

namespace gradsim {

// Invalid configuration, arguments or input files. The CLI maps it to exit code 2.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Non-finite values or a broken numerical invariant. The CLI maps it to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gradsim
