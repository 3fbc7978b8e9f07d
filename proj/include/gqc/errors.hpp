#pragma once

#include <stdexcept>
#include <string>

namespace gqc {

// Input text that is not even well-formed (JSON syntax etc).
struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// Well-formed input violating a documented invariant; the message names
// the offending path or value.
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// An operation was called outside its contract.
struct PreconditionError : std::logic_error {
  explicit PreconditionError(const std::string& msg) : std::logic_error(msg) {}
};

// A configurable size bound would be exceeded.
struct ResourceGuardError : std::runtime_error {
  explicit ResourceGuardError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace gqc
