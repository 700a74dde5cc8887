#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace morphtag {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape or extent disagreement between operands.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf produced by a forward or backward pass.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Misuse of the computation graph (non-scalar loss, double backward, ...).
class GraphError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration values or incompatible configurations.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Input data that parses but cannot be used (an empty training corpus, a
// dev set without tokens).
class DataError : public Error {
 public:
  using Error::Error;
};

// A word, tag or tensor name missing from the table it was looked up in.
class LookupError : public Error {
 public:
  using Error::Error;
};

// Unreadable checkpoint. Each failure mode has its own kind so callers can
// tell a foreign file from a newer format or a cut-off download.
class CheckpointError : public Error {
 public:
  enum class Kind { bad_magic, version_mismatch, truncated, malformed };

  CheckpointError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// Malformed input file content. line() is 1-based, 0 when not applicable.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + (line ? ":" + std::to_string(line) : std::string()) + ": " + what),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace morphtag
