#pragma once

#include <stdexcept>
#include <string>

namespace jcsdrm {

/// Raised when a numerical routine cannot produce a usable result
/// (e.g. a covariance that stays singular after regularization).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace jcsdrm
