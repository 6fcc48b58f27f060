#pragma once

#include <stdexcept>
#include <string>

namespace fsc {

enum class ErrorKind {
  input,
  singular_covariance,
  degenerate_component,
  insufficient_labels,
  init,
  strategy_unavailable,
  parse,
  schema,
  degenerate_mask,
  undefined_index,
};

const char* to_string(ErrorKind kind);

// Every library failure is reported as an fsc::Error; callers that need to
// branch on the cause inspect kind() rather than the message text.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace fsc
