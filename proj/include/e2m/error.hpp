#pragma once

#include <stdexcept>
#include <string>

namespace e2m {

// Invalid input: bad shapes, out-of-range data, malformed files, zero model
// mass where a positive value is required.
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A broken algorithmic invariant (non-monotone objective, NaN statistics).
// Seeing one of these means a bug, not bad input.
class InternalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace e2m
