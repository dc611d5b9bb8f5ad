#pragma once

#include <stdexcept>
#include <string>

namespace mtve {

/// Request outside what the library can evaluate (e.g. pointwise delta
/// functions, kernel families a routine does not accept).
class UnsupportedError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Two fields or grids that were expected to agree do not.
class ShapeError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// A problem too large for the requested (dense or deterministic) method.
class SizeGuardError : public std::length_error {
public:
  using std::length_error::length_error;
};

class SingularMatrixError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace mtve
