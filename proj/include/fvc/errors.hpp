#pragma once

#include <stdexcept>
#include <string>

namespace fvc {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Geometry / model
struct NonInvertible : Error {
  using Error::Error;
};
struct NoConvergence : Error {
  using Error::Error;
};
struct SamplingExhausted : Error {
  using Error::Error;
};
struct MonotonicityViolation : Error {
  using Error::Error;
};

// Field / raster contracts
struct DimensionMismatch : Error {
  using Error::Error;
};
struct LengthMismatch : Error {
  using Error::Error;
};
struct EmptyValidRegion : Error {
  using Error::Error;
};

// Temporal scheme
struct InvalidWeightRange : Error {
  using Error::Error;
};

// Metrics
struct DegenerateFit : Error {
  using Error::Error;
};
struct PathTooShort : Error {
  using Error::Error;
};

// I/O
struct BadMagic : Error {
  using Error::Error;
};
struct TruncatedFile : Error {
  using Error::Error;
};
struct DimensionOverflow : Error {
  using Error::Error;
};
struct UnsupportedFormat : Error {
  using Error::Error;
};
struct CorruptFile : Error {
  using Error::Error;
};
struct IoFailure : Error {
  using Error::Error;
};
struct EmptySource : Error {
  using Error::Error;
};

}  // namespace fvc
