#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace rbopt {

/// Base class for all library errors.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A caller violated an operation's precondition (e.g. tangent vectors
/// rooted at different base points, shape mismatch).
struct ContractViolation : Error {
  using Error::Error;
};

/// Input left the mathematical domain of an operation (e.g. logarithm of
/// antipodal points on the sphere chart).
struct DomainError : Error {
  using Error::Error;
};

/// Numerically degenerate input: failed eigendecomposition, rank-deficient
/// QR factor, non-positive-definite matrix where one is required.
struct DegenerateInput : Error {
  using Error::Error;
};

/// The requested operation needs an oracle the problem does not provide.
struct UnsupportedOperation : Error {
  using Error::Error;
};

/// A tolerance or step parameter is outside its usable range.
struct ToleranceError : Error {
  using Error::Error;
};

/// Invalid configuration (bad dimensions, non-positive seeds, ...).
struct ConfigError : Error {
  using Error::Error;
};

/// An iterative solver produced non-finite values. Carries the residual
/// history seen up to the failure.
struct DivergenceError : Error {
  DivergenceError(const std::string& what, std::vector<double> residuals)
      : Error(what), residual_history(std::move(residuals)) {}
  std::vector<double> residual_history;
};

/// The curvature condition <p, H[p]> > 0 failed inside conjugate gradient,
/// signalling an indefinite operator.
struct IndefinitenessError : Error {
  using Error::Error;
};

}  // namespace rbopt
