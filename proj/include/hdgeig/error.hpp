#pragma once

#include <stdexcept>
#include <string>

namespace hdgeig {

/// Invalid configuration or input (bad degree, incompatible tau/space choice, size guard).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A factorization or iteration failed.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hdgeig
