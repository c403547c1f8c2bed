#pragma once

#include <stdexcept>
#include <string>

namespace rger {

// Shape/dimension violations in numeric ops.
struct ShapeError : std::runtime_error {
  explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Precondition/contract violations (non-scalar loss, missing reference, ...).
struct ContractError : std::runtime_error {
  explicit ContractError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad input data: malformed corpus lines, missing fields, checkpoint mismatch.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace rger
