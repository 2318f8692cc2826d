#pragma once

#include <stdexcept>
#include <string>

namespace fedlab {

// Operand dimensions do not agree.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Argument outside the operation's domain (zero norm, bad label, empty set).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A NaN or infinity showed up where only finite values are allowed.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed external input (CSV rows, config files, message files).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fedlab
