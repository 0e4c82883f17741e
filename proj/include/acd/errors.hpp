#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace acd {

// Malformed input. `line` is 1-based when the input is line oriented, 0
// otherwise; `position` is a byte offset for inline markup.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line = 0, std::size_t position = 0)
      : std::runtime_error(what), line_(line), position_(position) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t line_;
  std::size_t position_;
};

// An offset or index points outside the data it refers to.
class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// A value violates a type invariant (overlapping spans, bad ratios, ...).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Completion backend failure. Transient failures are retried by the batch
// runner; permanent ones are reported immediately.
class BackendError : public std::runtime_error {
 public:
  BackendError(const std::string& what, bool transient)
      : std::runtime_error(what), transient_(transient) {}

  bool transient() const noexcept { return transient_; }

 private:
  bool transient_;
};

}  // namespace acd
