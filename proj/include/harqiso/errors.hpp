#pragma once

#include <stdexcept>
#include <string>

namespace harqiso {

/// Raised when an argument falls outside an operation's precondition.
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

/// Raised when an infinite series or iterative search fails to settle within
/// its horizon.
class ConvergenceError : public std::runtime_error {
 public:
  explicit ConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline void require(bool condition, const std::string& message) {
  if (!condition) throw DomainError(message);
}

}  // namespace detail
}  // namespace harqiso
