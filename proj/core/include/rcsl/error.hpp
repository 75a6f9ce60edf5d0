#pragma once

#include <stdexcept>
#include <string>

namespace rcsl {

// Bad user input: malformed config, out-of-range hyperparameter, unknown key.
// The CLI maps this to exit code 1.
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Failure while doing otherwise-valid work: I/O, corrupt artifact, numerical
// blow-up. The CLI maps this to exit code 2.
struct RuntimeError : std::runtime_error {
  explicit RuntimeError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace rcsl
