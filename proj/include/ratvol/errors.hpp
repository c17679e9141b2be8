#pragma once

#include <stdexcept>
#include <string>

namespace ratvol {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Dense kernel (SVD/Schur/QZ) failed to converge.
class KernelFailureError : public Error {
 public:
  using Error::Error;
};

// The matrix pencil is singular or its eigenvalue structure degenerate.
class DegeneratePencilError : public Error {
 public:
  using Error::Error;
};

// Sylvester/Lyapunov equation has no unique solution (overlapping spectra).
class SingularEquationError : public Error {
 public:
  using Error::Error;
};

// A matrix required to be asymptotically stable is not.
class StabilityViolationError : public Error {
 public:
  using Error::Error;
};

// Transfer function evaluated at (or numerically near) a pole.
class PoleEvaluationError : public Error {
 public:
  using Error::Error;
};

// The rational function is numerically zero (no co-degree defined).
class ZeroFunctionError : public Error {
 public:
  using Error::Error;
};

// Spectral density has a pole or zero on the imaginary axis.
class AxisPoleError : public Error {
 public:
  using Error::Error;
};

class IllConditionedFactorizationError : public Error {
 public:
  using Error::Error;
};

// Spectral factorization did not produce a rank-one LMI solution.
class FactorizationFailureError : public Error {
 public:
  using Error::Error;
};

// Summand violates an invariant (CM not real positive, unstable A, ...).
class InvalidSummandError : public Error {
 public:
  using Error::Error;
};

// Requested moment order exceeds what the co-degree permits.
class MomentExistenceError : public Error {
 public:
  using Error::Error;
};

class DegenerateScalingError : public Error {
 public:
  using Error::Error;
};

// Truncation below the co-degree makes the relative error bound infinite.
class InfiniteBoundError : public Error {
 public:
  using Error::Error;
};

// Composition g1(g2(.)) is improper: d2 is an eigenvalue of A1.
class ImproperCompositionError : public Error {
 public:
  using Error::Error;
};

class UnsupportedDensityError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Failure inside a filter step; carries the 1-based time index.
class StepFailureError : public Error {
 public:
  StepFailureError(int t, const std::string& what)
      : Error("filter step t=" + std::to_string(t) + ": " + what), t_(t) {}
  int step() const { return t_; }

 private:
  int t_ = 0;
};

class EstimationFailureError : public Error {
 public:
  using Error::Error;
};

}  // namespace ratvol
