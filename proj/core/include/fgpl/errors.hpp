#pragma once

#include <stdexcept>
#include <string>

namespace fgpl {

/// Base class for all errors raised by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Geometry.
struct DegenerateSegment : Error {
  using Error::Error;
};
struct DegenerateProjection : Error {
  using Error::Error;
};
struct AntipodalSegment : Error {
  using Error::Error;
};
struct DegenerateConfiguration : Error {
  using Error::Error;
};

// Input preparation.
struct InsufficientStructure : Error {
  using Error::Error;
};
struct EmptyCluster : Error {
  using Error::Error;
};

// Distance fields and pose search.
struct EmptyInput : Error {
  using Error::Error;
};
struct GridMismatch : Error {
  using Error::Error;
};
struct DensityViolation : Error {
  using Error::Error;
};
struct EmptyPool : Error {
  using Error::Error;
};

// Refinement.
struct TooFewMatches : Error {
  using Error::Error;
};
struct AllCandidatesFailed : Error {
  using Error::Error;
};

// Harness and I/O.
struct PoseOutsideRoom : Error {
  using Error::Error;
};
struct CacheBadMagic : Error {
  using Error::Error;
};
struct CacheBadVersion : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace fgpl
