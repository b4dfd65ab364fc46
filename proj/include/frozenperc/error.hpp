#pragma once

#include <stdexcept>
#include <string>

namespace frozenperc {

// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A documented size cap (enumeration depth, DP order, truncation N) was exceeded.
class CapExceeded : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Iterative numerics gave up; carries the best value reached and its error bound.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double best_estimate, double error_bound)
      : std::runtime_error(what), best_estimate_(best_estimate), error_bound_(error_bound) {}

  double best_estimate() const noexcept { return best_estimate_; }
  double error_bound() const noexcept { return error_bound_; }

 private:
  double best_estimate_;
  double error_bound_;
};

}  // namespace frozenperc
