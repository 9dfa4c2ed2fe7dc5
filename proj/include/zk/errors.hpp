#pragma once

#include <stdexcept>
#include <string>

namespace zk {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A precondition on shapes or arguments was violated by the caller.
class ContractViolation : public Error {
public:
  using Error::Error;
};

/// Invalid or inconsistent run configuration.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// An outer nonlinear iteration failed to reach its tolerance.
class IterationFailure : public Error {
public:
  IterationFailure(const std::string& what, double last_residual)
      : Error(what), last_residual_(last_residual) {}
  double last_residual() const noexcept { return last_residual_; }

private:
  double last_residual_;
};

/// The Krylov inner solver stagnated.
class InnerSolverError : public Error {
public:
  using Error::Error;
};

/// A field cannot be represented on the requested grid.
class ResolutionError : public Error {
public:
  using Error::Error;
};

/// The curvature at the tracked maximum is too small to define a frame speed.
class DegenerateMaximum : public Error {
public:
  using Error::Error;
};

/// The tracked maximum moved too far to be recentred.
class TrackingLost : public Error {
public:
  using Error::Error;
};

/// Input outside the domain of a fit or transform (e.g. log of g <= 0).
class DomainError : public Error {
public:
  using Error::Error;
};

/// A fitted blow-up time ran into the upper end of its search bracket: the
/// series is not consistent with a finite-time power law.
class NoBlowUp : public Error {
public:
  using Error::Error;
};

/// Snapshot or series file could not be read or written.
class IoError : public Error {
public:
  using Error::Error;
};

}  // namespace zk
