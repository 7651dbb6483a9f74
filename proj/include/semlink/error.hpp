#pragma once

#include <stdexcept>
#include <string>

namespace semlink {

// Base of every error thrown by the library. The CLI maps any of these to a
// nonzero exit code with the message as diagnostic.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Parameters outside their admissible domain (k <= 0, even median window, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Mismatched lengths or image sizes.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A value outside a configured range (e.g. SNR outside the schedule knots).
class RangeError : public Error {
 public:
  using Error::Error;
};

// Channel matrix without full column rank.
class NumericalRankError : public Error {
 public:
  using Error::Error;
};

// Exhaustive ML search requested over more than the allowed hypotheses.
class SearchSpaceError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Readable file with unsupported content (color, 16-bit, malformed CSV).
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace semlink
