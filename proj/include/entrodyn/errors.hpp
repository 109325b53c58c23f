#ifndef ENTRODYN_ERRORS_HPP
#define ENTRODYN_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <vector>

namespace entrodyn {

// Bad arguments (shapes, indices, out-of-range parameters).
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Evaluation requested outside a function's domain (e.g. boundary point).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// An iterative solver failed; carries the last iterate and residual.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, std::vector<double> last_iterate, double residual)
      : std::runtime_error(what), last_iterate(std::move(last_iterate)), residual(residual) {}
  explicit NumericalError(const std::string& what) : std::runtime_error(what), residual(0) {}

  std::vector<double> last_iterate;
  double residual;
};

// State left the admissible region during integration.
class IntegrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace entrodyn

#endif  // ENTRODYN_ERRORS_HPP
