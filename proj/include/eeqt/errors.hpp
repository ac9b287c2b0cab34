#pragma once

#include <stdexcept>
#include <string>

namespace eeqt {

// Rejected input: dimension mismatches, invariant violations in user data,
// malformed configuration. Maps to CLI exit status 1.
class InvalidInput : public std::invalid_argument {
 public:
  explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

// A numerical invariant broke during a run (trace drift, lost positivity,
// norm blow-up). Maps to CLI exit status 2.
class NumericalFailure : public std::runtime_error {
 public:
  explicit NumericalFailure(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace eeqt
