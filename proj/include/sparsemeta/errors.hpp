#pragma once

#include <stdexcept>
#include <string>

namespace sparsemeta {

/// Malformed or inconsistent user input (CSV rows, flags, configs).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical routine could not produce a usable answer.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sparsemeta
