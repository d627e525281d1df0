#pragma once

#include <stdexcept>
#include <string>

namespace tradecast {

// Operand shapes are inconsistent (matrix products, parameter wiring, ...).
class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An argument violates a documented precondition.
class ArgumentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An input document (CSV, checkpoint, ...) cannot be parsed.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A checkpoint declares a format version this build does not support.
class VersionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller-visible state misuse (e.g. a cache paired with the wrong params).
class StateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Filesystem failure (unreadable/unwritable path).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad CLI flag or config-file entry.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tradecast
