#pragma once

#include <stdexcept>
#include <string>

namespace bfcheck {

// Base class for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input is well-formed but the requested statistic is undefined for it
// (e.g. a t-test on a sample with zero variance).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

}  // namespace bfcheck
