#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace trajscene {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text. `line` is 1-based, 0 when the whole document is at fault.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Structurally valid input that violates a cross-record invariant.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Segment too short in time to derive speeds.
class DegenerateSegmentError : public Error {
 public:
  using Error::Error;
};

/// Remote call failed after exhausting retries.
class TransportError : public Error {
 public:
  TransportError(const std::string& what, int attempts, bool retryable)
      : Error(what + " (attempts: " + std::to_string(attempts) + ")"),
        attempts_(attempts),
        retryable_(retryable) {}
  int attempts() const noexcept { return attempts_; }
  bool retryable() const noexcept { return retryable_; }

 private:
  int attempts_;
  bool retryable_;
};

/// Pipeline failure tagged with the stage and, when known, the segment.
class StageError : public Error {
 public:
  StageError(std::string stage, std::string segment_id, const std::string& what)
      : Error("[" + stage + "]" + (segment_id.empty() ? "" : " segment " + segment_id) + ": " + what),
        stage_(std::move(stage)),
        segment_id_(std::move(segment_id)) {}
  const std::string& stage() const noexcept { return stage_; }
  const std::string& segment_id() const noexcept { return segment_id_; }

 private:
  std::string stage_;
  std::string segment_id_;
};

}  // namespace trajscene
