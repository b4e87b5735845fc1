#pragma once

#include <stdexcept>
#include <string>

namespace ghrc {

/// Base class of every error raised by the pipeline.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class ConfigurationError : public Error {
 public:
  using Error::Error;
};

/// Line of sight does not intersect the (height-inflated) ellipsoid.
class MissesEarth : public Error {
 public:
  using Error::Error;
};

class OutsideFrame : public Error {
 public:
  using Error::Error;
};

class NonConvergence : public Error {
 public:
  using Error::Error;
};

/// Zero-variance image chip; nothing to correlate.
class Homogeneous : public Error {
 public:
  using Error::Error;
};

/// Integer correlation peak sits on the border of the search surface.
class PeakOnEdge : public Error {
 public:
  using Error::Error;
};

class InsufficientOverlap : public Error {
 public:
  using Error::Error;
};

class SingularNormalEquations : public Error {
 public:
  using Error::Error;
};

}  // namespace ghrc
