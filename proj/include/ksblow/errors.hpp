#pragma once

#include <stdexcept>
#include <string>

namespace ksblow {

/// Input violates a precondition or a validated invariant (exit code 1).
class DomainError : public std::invalid_argument {
 public:
  explicit DomainError(const std::string& what) : std::invalid_argument(what) {}
};

/// A numerical procedure failed to converge or produced an inconsistent result
/// (exit code 2).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Integral diverges (non-integrable singularity, failed integrability gate).
class DivergenceError : public NumericalError {
 public:
  explicit DivergenceError(const std::string& what) : NumericalError(what) {}
};

[[noreturn]] void throw_domain(const std::string& what);
[[noreturn]] void throw_numerical(const std::string& what);

}  // namespace ksblow
