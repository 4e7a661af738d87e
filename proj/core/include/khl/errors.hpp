#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace khl {

/// Broad failure class, used by the CLI to pick an exit code.
enum class ErrorCategory {
  validation,  ///< bad input or an ill-posed request
  numerical,   ///< valid request that the data cannot support
};

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, std::string kind, const std::string& message);

  ErrorCategory category() const noexcept { return category_; }
  /// Short machine-readable tag such as "input" or "degenerate-fit".
  const std::string& kind() const noexcept { return kind_; }

 private:
  ErrorCategory category_;
  std::string kind_;
};

class InputError : public Error {
 public:
  explicit InputError(const std::string& message);
};

/// Too few rows, or data with no spread (median heuristic).
class DegenerateDataError : public Error {
 public:
  explicit DegenerateDataError(const std::string& message);
};

/// A factor with a single level.
class DegenerateDesignError : public Error {
 public:
  explicit DegenerateDesignError(const std::string& message);
};

/// L(X'X)^-L' singular, or L outside the estimable space of X.
class NonTestableContrastError : public Error {
 public:
  explicit NonTestableContrastError(const std::string& message);
};

/// The residual Gram matrix vanishes (perfect fit).
class DegenerateFitError : public Error {
 public:
  explicit DegenerateFitError(const std::string& message);
};

class TruncationError : public Error {
 public:
  TruncationError(const std::string& message, std::size_t available);
  std::size_t available() const noexcept { return available_; }

 private:
  std::size_t available_;
};

class AnchorRankError : public Error {
 public:
  AnchorRankError(std::size_t requested, std::size_t achievable);
  std::size_t achievable() const noexcept { return achievable_; }

 private:
  std::size_t achievable_;
};

/// An observation whose leverage is 1 (it determines its own fitted value).
class LeverageError : public Error {
 public:
  LeverageError(std::size_t index, double leverage);
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

class UnsupportedKernelError : public Error {
 public:
  explicit UnsupportedKernelError(const std::string& message);
};

}  // namespace khl
