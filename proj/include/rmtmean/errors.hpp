#pragma once

#include <stdexcept>
#include <string>

namespace rmtmean {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed or out-of-contract input: non-finite entries, bad shapes read from
/// files, invalid option values.
class InvalidInput : public Error {
 public:
  explicit InvalidInput(const std::string& what) : Error(what) {}
};

/// Operands whose dimensions do not agree.
class DimMismatch : public Error {
 public:
  explicit DimMismatch(const std::string& what) : Error(what) {}
};

/// A matrix that is required to be symmetric positive definite is not, within
/// the relative eigenvalue floor used by SpdMatrix.
class NotPositiveDefinite : public Error {
 public:
  explicit NotPositiveDefinite(const std::string& what) : Error(what) {}
};

/// The corrected-distance machinery requires more samples than dimensions
/// (aspect ratio p/n strictly below one).
class AspectRatioOutOfRange : public Error {
 public:
  explicit AspectRatioOutOfRange(const std::string& what) : Error(what) {}
};

/// A retraction step left the positive definite cone numerically.
class RetractionBreakdown : public Error {
 public:
  explicit RetractionBreakdown(const std::string& what) : Error(what) {}
};

}  // namespace rmtmean
