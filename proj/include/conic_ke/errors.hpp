#pragma once

#include <stdexcept>
#include <string>

namespace conic_ke {

/// Base of all library failures; `exit_code` is the CLI status the failure maps to.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what, int exit_code = 1)
      : std::runtime_error(what), exit_code_(exit_code) {}
  int exit_code() const noexcept { return exit_code_; }

 private:
  int exit_code_;
};

/// Invalid configuration or precondition violation.
class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what) : Error(what, 1) {}
};

class NewtonDiverged : public Error {
 public:
  NewtonDiverged(const std::string& what, double residual)
      : Error(what, 2), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class PositivityLost : public Error {
 public:
  explicit PositivityLost(const std::string& what) : Error(what, 3) {}
};

/// Continuation could not advance below the minimum step.
class PathStalled : public Error {
 public:
  PathStalled(const std::string& what, double last_good_tau)
      : Error(what, 4), last_good_tau_(last_good_tau) {}
  double last_good_tau() const noexcept { return last_good_tau_; }

 private:
  double last_good_tau_;
};

/// Asymptotic fit did not look conic.
class FitError : public Error {
 public:
  explicit FitError(const std::string& what) : Error(what, 5) {}
};

/// Ball cover violates the radius budget.
class CoverInfeasible : public Error {
 public:
  explicit CoverInfeasible(const std::string& what) : Error(what, 6) {}
};

/// Requested radius leaves the model or grid.
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(what, 7) {}
};

}  // namespace conic_ke
