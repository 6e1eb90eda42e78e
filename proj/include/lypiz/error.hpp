#pragma once

#include <stdexcept>
#include <string>

namespace lypiz {

/// Base for every error raised by the library. The message is prefixed with
/// the module that raised it, e.g. "graph-core: duplicate edge {x,y}".
class Error : public std::runtime_error {
 public:
  Error(std::string module, const std::string& message)
      : std::runtime_error(module + ": " + message), module_(std::move(module)) {}

  const std::string& module() const noexcept { return module_; }

 private:
  std::string module_;
};

/// Inputs violate a documented precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure could not deliver a trustworthy result.
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace lypiz
