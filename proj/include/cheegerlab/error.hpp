#pragma once

#include <stdexcept>
#include <string>

namespace cheegerlab {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the domain of a profile, mesh or grid.
class DomainError : public Error {
public:
  using Error::Error;
};

/// Evaluation at a singular point (η_w and K_w at r -> 0).
class SingularityError : public DomainError {
public:
  using DomainError::DomainError;
};

/// Malformed input: CSV, JSON spec, mesh file, CLI arguments.
class ParseError : public Error {
public:
  using Error::Error;
};

/// Quadrature, ODE or limit computation that did not reach its tolerance.
class NumericError : public Error {
public:
  using Error::Error;
};

class QuadratureError : public NumericError {
public:
  QuadratureError(const std::string& what, double estimate)
      : NumericError(what + " (achieved error estimate " + std::to_string(estimate) + ")"),
        error_estimate(estimate) {}
  double error_estimate;
};

/// Inputs that are individually valid but inconsistent with each other,
/// e.g. a hyperboloid mesh analysed against a flat constellation.
class InputMismatch : public Error {
public:
  using Error::Error;
};

/// Mesh that violates a structural invariant (off-model vertex, degenerate face...).
class MeshError : public Error {
public:
  using Error::Error;
};

} // namespace cheegerlab
