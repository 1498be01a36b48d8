#pragma once

#include <stdexcept>
#include <string>

namespace warpband {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Evaluation point outside the domain of a function.
class DomainError : public Error {
public:
  using Error::Error;
};

/// Malformed argument (bad step size, mismatched grids, ...).
class ArgumentError : public Error {
public:
  using Error::Error;
};

/// Object parameters violate a documented range.
class ConstructionError : public Error {
public:
  using Error::Error;
};

/// Input is valid in general but outside what an operation supports.
class UnsupportedError : public Error {
public:
  using Error::Error;
};

/// A hypothesis of the operation does not hold for the given input.
class PreconditionError : public Error {
public:
  using Error::Error;
};

/// Iterative method failed to converge.
class NumericalError : public Error {
public:
  using Error::Error;
};

/// Malformed input file.
class ParseError : public Error {
public:
  using Error::Error;
};

} // namespace warpband
