#pragma once

#include <stdexcept>

namespace momentsos {

/// A basis size does not fit the platform integer.
class SizingError : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

/// Operands disagree on the number of variables or on shapes.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A polynomial's degree exceeds what a moment sequence or relaxation supports.
class DegreeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Requested relaxation order is below the minimal order of the problem.
class OrderError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Atom extraction could not produce a measure matching the moments.
class ExtractionFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A recovered SOS certificate failed its residual check.
class CertificateRejected : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A moment problem violates a modeling precondition, such as a measure whose mass no constraint bounds.
class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace momentsos
