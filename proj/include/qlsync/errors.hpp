#pragma once

#include <stdexcept>
#include <string>

namespace qlsync {

/// Invalid argument or configuration value supplied by the caller.
/// CLI maps this to exit code 2.
class parameter_error : public std::invalid_argument {
public:
  explicit parameter_error(const std::string& msg) : std::invalid_argument(msg) {}
};

/// A documented precondition or structural invariant was violated
/// (dimension mismatch, non-Hermitian input, missing blocks, ...).
/// CLI maps this to exit code 2.
class contract_error : public std::logic_error {
public:
  explicit contract_error(const std::string& msg) : std::logic_error(msg) {}
};

/// Numerical failure: divergent integration, non-finite values,
/// non-convergent solver. CLI maps this to exit code 3.
class numeric_error : public std::runtime_error {
public:
  explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Filesystem / stream failure. CLI maps this to exit code 4.
class io_error : public std::runtime_error {
public:
  explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace qlsync
