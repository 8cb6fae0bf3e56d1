#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace nbv {

enum class ErrorKind {
  dimension,
  parameter,
  degenerate_input,
  precondition,
  division_degeneracy,
  io,
  config,
};

std::string_view to_string(ErrorKind kind);

/// Exception carrying a coarse category, used by the CLI for its exit line.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

}  // namespace nbv
