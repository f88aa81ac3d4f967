#pragma once

#include <stdexcept>

namespace semigen {

/// Malformed input file (corpus, LM, checkpoint, config syntax).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Corpus too small for the requested split.
class SizingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent configuration values.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace semigen
