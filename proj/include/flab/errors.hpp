#pragma once

#include <stdexcept>
#include <string>

namespace flab {

enum class ErrorKind {
  InvalidInput,        // malformed arguments (dimension mismatch, empty field)
  InvalidParameter,    // out-of-range parameter (N <= n, a >= 1, r < 0)
  MetricViolation,     // norm fails Minkowski requirements at a point
  DegenerateDirection, // y = 0 where a direction is required
  DegenerateFlag,      // flag transverse vector parallel to y
  DegenerateReference, // reference vector field vanishes on a cell
  OutOfDomain,         // evaluation outside the admissible set
  InvalidVolume,       // volume density not positive/finite
  MeshQuality,         // mesh fails a structural postcondition
  NumericFailure,      // iteration/factorization did not converge
  ConfigError,         // bad configuration file
  Unsupported,         // valid request outside the implemented envelope
};

inline const char* error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::InvalidInput: return "invalid-input";
    case ErrorKind::InvalidParameter: return "invalid-parameter";
    case ErrorKind::MetricViolation: return "metric-violation";
    case ErrorKind::DegenerateDirection: return "degenerate-direction";
    case ErrorKind::DegenerateFlag: return "degenerate-flag";
    case ErrorKind::DegenerateReference: return "degenerate-reference";
    case ErrorKind::OutOfDomain: return "out-of-domain";
    case ErrorKind::InvalidVolume: return "invalid-volume";
    case ErrorKind::MeshQuality: return "mesh-quality";
    case ErrorKind::NumericFailure: return "numeric-failure";
    case ErrorKind::ConfigError: return "config-error";
    case ErrorKind::Unsupported: return "unsupported";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(error_kind_name(kind)) + ": " + what),
        kind_(kind),
        message_(what) {}
  ErrorKind kind() const { return kind_; }
  // message without the kind prefix, for rethrowing with added context
  const std::string& message() const { return message_; }

 private:
  ErrorKind kind_;
  std::string message_;
};

}  // namespace flab
