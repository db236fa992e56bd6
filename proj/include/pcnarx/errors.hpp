#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pcnarx {

// Invalid argument value or shape (n = 0, mismatched dimensions, bad q, ...).
class ArgumentError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// Value outside the domain of a distribution or transform.
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

// Least-squares system is numerically rank deficient.
class SingularityError : public std::runtime_error {
public:
  SingularityError(const std::string& what, double rcond)
      : std::runtime_error(what), rcond_(rcond) {}
  double rcond() const noexcept { return rcond_; }

private:
  double rcond_;
};

// Leave-one-out leverage h_i too close to one.
class DegenerateLeverageError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Free-run recursion blew past the divergence bound.
class InstabilityError : public std::runtime_error {
public:
  InstabilityError(const std::string& what, std::size_t instant)
      : std::runtime_error(what), instant_(instant) {}
  std::size_t instant() const noexcept { return instant_; }

private:
  std::size_t instant_;
};

// Algorithmic failure of a fitting or selection stage.
class FitError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// ODE integrator failed (step size underflow).
class StiffnessError : public std::runtime_error {
public:
  StiffnessError(const std::string& what, double time)
      : std::runtime_error(what), time_(time) {}
  double time() const noexcept { return time_; }

private:
  double time_;
};

}  // namespace pcnarx
