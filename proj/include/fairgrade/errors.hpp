#pragma once

#include <stdexcept>
#include <string>

namespace fairgrade {

// Malformed external input (CSV rows, config files).
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Structurally well-formed input that violates a dataset/config invariant.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Internal contract breach (dimension mismatch, non-finite values).
struct InternalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace fairgrade
