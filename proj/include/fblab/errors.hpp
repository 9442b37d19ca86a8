#pragma once

#include <stdexcept>
#include <string>

namespace fblab {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed domain, resolution or config field.
class ConfigurationError : public Error {
public:
  using Error::Error;
};

/// A ball or point leaves the discretized domain.
class DomainError : public Error {
public:
  using Error::Error;
};

/// The grid is too coarse for the requested quadrature or rescaling.
class ResolutionError : public Error {
public:
  using Error::Error;
};

/// Integrability exponent outside the range where the growth theory applies.
class RegimeError : public Error {
public:
  using Error::Error;
};

/// Input violates an operation's documented contract.
class ContractError : public Error {
public:
  using Error::Error;
};

/// Boundary data outside the admissible (nonnegative) cone.
class AdmissibilityError : public Error {
public:
  using Error::Error;
};

class DegenerateInputError : public Error {
public:
  using Error::Error;
};

/// Too few usable rungs survive in a radius ladder.
class InsufficientDataError : public Error {
public:
  using Error::Error;
};

/// A randomized check could not reach a verdict (e.g. a trial did not converge).
class InconclusiveError : public Error {
public:
  using Error::Error;
};

/// Broken internal invariant; indicates a bug rather than bad input.
class InternalError : public Error {
public:
  using Error::Error;
};

} // namespace fblab
