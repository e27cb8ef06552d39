#pragma once

#include <stdexcept>
#include <string>

namespace syzflow {

enum class ErrorKind {
  IndeterminatePoint,
  PolePoint,
  CriticalPoint,
  CriticalPointHit,
  StepUnderflow,
  MaxStepsExceeded,
  OffVariety,
  ZeroCoordinate,
  ContractionFailure,
  EigenvalueViolation,
  DegenerateForm,
  DegenerateHessian,
  NumericalDegeneracy,
  UnclassifiedStratum,
  FormulaMismatch,
  QuadratureNonconvergence,
  NotPositive,
  InvalidArgument,
};

const char* to_string(ErrorKind k);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace syzflow
