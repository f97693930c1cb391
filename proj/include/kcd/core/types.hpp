#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace kcd {

using cplx = std::complex<double>;
using RealVector = Eigen::VectorXd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using ComplexMatrix = Eigen::MatrixXcd;

inline constexpr cplx I_unit{0.0, 1.0};

#ifdef KCD_VERSION_STRING
inline constexpr const char* kVersion = KCD_VERSION_STRING;
#else
inline constexpr const char* kVersion = "0.0.0";
#endif

// Classification of library failures. Every thrown kcd::Error carries one.
enum class ErrorKind {
  BackendMismatch,
  SiteCountMismatch,
  InvalidMeasure,
  NonOrthonormalBasis,
  CapExceeded,
  ZeroDerivative,
  NumericalBreakdown,
  WrongRoute,
  SingularSystem,
  LengthMismatch,
  IllDefinedAgp,
  InvalidArgument,
  LevelCrossing,
  StepRefinementFailure,
  NotNormalized,
  Config,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::BackendMismatch: return "backend mismatch";
    case ErrorKind::SiteCountMismatch: return "site-count mismatch";
    case ErrorKind::InvalidMeasure: return "invalid measure";
    case ErrorKind::NonOrthonormalBasis: return "non-orthonormal basis";
    case ErrorKind::CapExceeded: return "dimension cap exceeded";
    case ErrorKind::ZeroDerivative: return "zero derivative";
    case ErrorKind::NumericalBreakdown: return "numerical breakdown";
    case ErrorKind::WrongRoute: return "wrong solution route";
    case ErrorKind::SingularSystem: return "singular system";
    case ErrorKind::LengthMismatch: return "length mismatch";
    case ErrorKind::IllDefinedAgp: return "ill-defined gauge potential";
    case ErrorKind::InvalidArgument: return "invalid argument";
    case ErrorKind::LevelCrossing: return "level crossing";
    case ErrorKind::StepRefinementFailure: return "step refinement failure";
    case ErrorKind::NotNormalized: return "not normalized";
    case ErrorKind::Config: return "config error";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) throw Error(kind, what);
}

}  // namespace kcd
