#pragma once

#include <stdexcept>
#include <string>

namespace teprog {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A point lies outside dom(b), the zone U, or the constraint set.
class DomainError : public Error {
 public:
  using Error::Error;
};

class InvalidParameter : public Error {
 public:
  using Error::Error;
};

/// No certified strong-convexity parameter for the (geometry, set) pair.
class NotStronglyConvex : public Error {
 public:
  using Error::Error;
};

/// The smooth term has no Lipschitz-bound formula over the requested set.
class NoBoundAvailable : public Error {
 public:
  using Error::Error;
};

class NotFound : public Error {
 public:
  using Error::Error;
};

class PreconditionViolation : public Error {
 public:
  using Error::Error;
};

/// The inner proximal solver did not reach its residual tolerance.
class MaxInnerIterations : public Error {
 public:
  using Error::Error;
};

/// Any failure of a prox evaluation inside an outer iteration.
class ProxFailure : public Error {
 public:
  using Error::Error;
};

class BacktrackOverflow : public Error {
 public:
  using Error::Error;
};

/// A runtime invariant of the outer loop was violated (e.g. x_k left S_k).
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

class DegenerateWindow : public Error {
 public:
  using Error::Error;
};

class ReferenceInfeasible : public Error {
 public:
  using Error::Error;
};

/// Malformed or schema-invalid input file.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Files that should describe the same instance disagree.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

}  // namespace teprog
