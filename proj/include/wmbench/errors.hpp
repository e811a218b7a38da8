#pragma once

#include <stdexcept>
#include <string>

namespace wmbench {

/// Caller passed a value outside the documented input domain.
class InputDomainError : public std::invalid_argument {
 public:
  explicit InputDomainError(const std::string& what) : std::invalid_argument(what) {}
};

/// Requested computation exceeds a hard enumeration/sampling budget.
class BudgetError : public std::runtime_error {
 public:
  explicit BudgetError(const std::string& what) : std::runtime_error(what) {}
};

/// API misuse: the operation is not defined for this configuration.
class ContractError : public std::logic_error {
 public:
  explicit ContractError(const std::string& what) : std::logic_error(what) {}
};

/// Malformed manifest, flags, or input files.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace wmbench
