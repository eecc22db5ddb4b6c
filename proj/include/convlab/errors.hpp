#pragma once

#include <stdexcept>
#include <string>

namespace convlab {

enum class ErrorKind {
  OutOfDomain,
  NotPositiveDefinite,
  StencilOutsideDomain,
  LeftDomain,
  NonFiniteState,
  NoConvergence,
  OracleMismatch,
  OutOfRange,
  RadiusBeyondInjectivity,
  BudgetExceeded,
  UnknownModel,
  BadParams,
  BadConfig,
  InvalidArgument,
};

const char* to_string(ErrorKind kind);

// Single exception type for the library; callers switch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

  // Config-level problems map to exit code 2, numerical ones to 3.
  bool is_config_error() const {
    return kind_ == ErrorKind::UnknownModel || kind_ == ErrorKind::BadParams ||
           kind_ == ErrorKind::BadConfig;
  }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::OutOfDomain: return "OutOfDomain";
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::StencilOutsideDomain: return "StencilOutsideDomain";
    case ErrorKind::LeftDomain: return "LeftDomain";
    case ErrorKind::NonFiniteState: return "NonFiniteState";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::OracleMismatch: return "OracleMismatch";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::RadiusBeyondInjectivity: return "RadiusBeyondInjectivity";
    case ErrorKind::BudgetExceeded: return "BudgetExceeded";
    case ErrorKind::UnknownModel: return "UnknownModel";
    case ErrorKind::BadParams: return "BadParams";
    case ErrorKind::BadConfig: return "BadConfig";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace convlab
