#pragma once

#include <stdexcept>
#include <string>

namespace sparseforge {

// Classified failures. Kind decides the CLI exit code: anything raised while
// reading arguments maps to usage errors, the rest to data errors.
enum class ErrorKind {
  Parse,             // grammar violation in an encoding, map, or query string
  NonAffine,         // map has no affine matrix form (div/mod/indirect terms)
  NonIntegral,       // operator would produce fractional coordinates
  UnsupportedSource, // conversion source carries indirect or layout primitives
  UnsupportedHeader, // input file type or header not handled
  DuplicateCoordinate,
  Collision,         // two distinct nonzeros restored to one dense cell
  InvalidOperation,  // operator applied to a tensor that violates its premise
  Singular,          // map matrix is not invertible
  Io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace sparseforge
