#pragma once

#include <stdexcept>
#include <string>

namespace urveda {

// Incompatible shapes, bad axes, extent mismatches.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Misuse of the gradient tape (double backward, detached loss, ...).
class AutodiffError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// NaN/Inf detected in an activation or loss.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration values or unknown configuration keys.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed or unreadable input data (files, masks, checkpoints).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace urveda
