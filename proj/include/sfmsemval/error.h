#pragma once

#include <stdexcept>
#include <string>

namespace sfmsemval {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad or inconsistent input data: malformed files, dangling references,
// unknown class ids. The CLI maps these to exit code 1.
class InputError : public Error {
 public:
  using Error::Error;
};

// A precondition of a numerical routine does not hold (degenerate sample,
// non-positive depth, zero-norm quaternion, ...).
class GeometryError : public Error {
 public:
  using Error::Error;
};

// An iterative solver could not make progress.
class SolverError : public Error {
 public:
  using Error::Error;
};

}  // namespace sfmsemval
