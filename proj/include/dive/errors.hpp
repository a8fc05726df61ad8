#pragma once

#include <stdexcept>
#include <string>

namespace dive {

// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A CDF with a flat index has no inverse.
class DegenerateCdfError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Probability level outside the range attained by a CDF on its support.
class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Malformed or inconsistent input data.
class DataError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace dive
