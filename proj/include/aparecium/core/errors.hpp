#pragma once

#include <stdexcept>
#include <string>

namespace aparecium {

// Caller handed us something malformed (bad hex, shape mismatch, box out of range).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A configuration value is outside its allowed domain.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A file or checkpoint that a step depends on is absent.
class MissingArtifactError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Checkpoint exists but was produced for a different model configuration.
class IncompatibleCheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The locator found no foreground region to crop.
class NotLocatedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace aparecium
