#pragma once

#include <stdexcept>
#include <string>

namespace kbv {

// Every error carries the name of the module that raised it so the CLI can
// report where a run was rejected.
class Error : public std::runtime_error {
 public:
  Error(std::string module, const std::string& what)
      : std::runtime_error(module + ": " + what), module_(std::move(module)) {}

  const std::string& module() const noexcept { return module_; }

 private:
  std::string module_;
};

// A documented precondition of an operation does not hold.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// A law or bound parameter lies outside its admissible range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// A configured size limit (exact-mode |Gamma|, dense-law n, sieve range)
// would be exceeded.
class ResourceError : public Error {
 public:
  using Error::Error;
};

// An inequality that must hold for every n failed. Distinct from the other
// errors because the CLI maps it to its own exit status.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace kbv
