#pragma once

#include <stdexcept>
#include <string>

namespace eqdim {

// Base for all library errors so callers can catch the whole family.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Every homogeneous component vanished at the evaluation point (indeterminacy
// point or degenerate map).
struct AllComponentsVanish : Error {
  using Error::Error;
};

// A preimage failed its residual check after polishing.
struct RootSolverFailure : Error {
  using Error::Error;
};

// Numeric preimage count disagrees with the declared topological degree.
struct DegreeMismatch : Error {
  using Error::Error;
};

// Component polynomials share a zero away from the origin.
struct HolomorphyViolation : Error {
  using Error::Error;
};

// Declared degrees violate d_t > lambda_{k-1}.
struct HypothesisViolation : Error {
  using Error::Error;
};

// More than half of the backward walks from a seed were discarded.
struct ExceptionalSeed : Error {
  using Error::Error;
};

// A backward orbit stepped too close to the exceptional set.
struct OrbitHitsJ : Error {
  using Error::Error;
};

// Too many cocycle segments passed near the critical set.
struct TooManyDiscards : Error {
  using Error::Error;
};

// The orbit's distance data is unusable for branch certification.
struct OrbitTooCloseToJ : Error {
  using Error::Error;
};

// Not enough nonzero ball masses to fit a local dimension.
struct InsufficientMass : Error {
  using Error::Error;
};

// The running mean of |log u| grows superlinearly along the orbit.
struct NonIntegrable : Error {
  using Error::Error;
};

// Experiment configuration violates the schema.
struct ConfigError : Error {
  using Error::Error;
};

// A pipeline stage failed; message carries the stage name.
struct StageFailure : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

// Operation is not defined for this map kind (e.g. algebraic preimages of a
// generic P^2 endomorphism).
struct UnsupportedOperation : Error {
  using Error::Error;
};

}  // namespace eqdim
