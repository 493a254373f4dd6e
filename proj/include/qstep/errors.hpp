#pragma once

#include <stdexcept>

namespace qstep {

/// Malformed input: schema violations or invalid values in a file.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A violated precondition: mismatched Q or k, empty sets, scales the
/// sampling cannot resolve, degenerate regression geometry.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace qstep
