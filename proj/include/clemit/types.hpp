#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace clemit {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;

inline constexpr Complex kI{0.0, 1.0};

enum class ErrorCode {
  NegativeRate,
  InterferenceOutOfRange,
  PumpMatrixNotPSD,
  BadChannel,
  NotNormalized,
  IndexOutOfRange,
  NonFinite,
  ConvergenceFailure,
  DegenerateKernel,
  NoSteadyState,
  GridMismatch,
  GridTooCoarse,
  IllConditionedEigenbasis,
  ConfigParse,
  ValidationFailed,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (notably the CLI) can map it onto an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), detail_(what) {}

  ErrorCode code() const noexcept { return code_; }
  /// Message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace clemit
