#include "khl/errors.hpp"

#include <sstream>

namespace khl {

Error::Error(ErrorCategory category, std::string kind, const std::string& message)
    : std::runtime_error(message), category_(category), kind_(std::move(kind)) {}

InputError::InputError(const std::string& message)
    : Error(ErrorCategory::validation, "input", message) {}

DegenerateDataError::DegenerateDataError(const std::string& message)
    : Error(ErrorCategory::validation, "degenerate-data", message) {}

DegenerateDesignError::DegenerateDesignError(const std::string& message)
    : Error(ErrorCategory::validation, "degenerate-design", message) {}

NonTestableContrastError::NonTestableContrastError(const std::string& message)
    : Error(ErrorCategory::validation, "non-testable-contrast", message) {}

DegenerateFitError::DegenerateFitError(const std::string& message)
    : Error(ErrorCategory::numerical, "degenerate-fit", message) {}

TruncationError::TruncationError(const std::string& message, std::size_t available)
    : Error(ErrorCategory::numerical, "truncation", message), available_(available) {}

namespace {

std::string anchor_message(std::size_t requested, std::size_t achievable) {
  std::ostringstream os;
  os << "requested " << requested << " anchors but the landmark residual Gram matrix has numerical rank "
     << achievable;
  return os.str();
}

std::string leverage_message(std::size_t index, double leverage) {
  std::ostringstream os;
  os << "observation " << index << " has leverage " << leverage << " (>= 1); its Cook distance is undefined";
  return os.str();
}

}  // namespace

AnchorRankError::AnchorRankError(std::size_t requested, std::size_t achievable)
    : Error(ErrorCategory::numerical, "anchor-rank", anchor_message(requested, achievable)),
      achievable_(achievable) {}

LeverageError::LeverageError(std::size_t index, double leverage)
    : Error(ErrorCategory::numerical, "leverage", leverage_message(index, leverage)), index_(index) {}

UnsupportedKernelError::UnsupportedKernelError(const std::string& message)
    : Error(ErrorCategory::validation, "unsupported-kernel", message) {}

}  // namespace khl
