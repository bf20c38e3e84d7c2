#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ria {

enum class ErrorKind {
  invalid_input,
  dimension,
  rank_deficient,
  insufficient_samples,
  singular,
  divergence,
  config,
  format,
  io,
  inconsistent,
};

std::string_view to_string(ErrorKind kind);

/// Library-wide exception. `kind()` is stable across stage wrapping so callers
/// can branch on the failure class without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  /// Same kind, message prefixed with "<stage>: ".
  Error with_stage(std::string_view stage) const {
    return Error(kind_, std::string(stage) + ": " + what());
  }

 private:
  ErrorKind kind_;
};

}  // namespace ria
