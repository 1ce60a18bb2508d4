#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gunl {

/// Tensor shapes disagree with what an operation requires.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A caller broke a documented precondition.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Input text could not be parsed. `line()` is 1-based, 0 when unknown.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(line ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Well-formed input with out-of-range or inconsistent content.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Optimization diverged. `epoch()` is the 0-based epoch that produced a non-finite loss.
class TrainingError : public std::runtime_error {
 public:
  TrainingError(const std::string& what, std::size_t epoch)
      : std::runtime_error(what + " at epoch " + std::to_string(epoch)), epoch_(epoch) {}
  std::size_t epoch() const { return epoch_; }

 private:
  std::size_t epoch_;
};

/// Persisted state is missing, truncated or incompatible.
class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gunl
