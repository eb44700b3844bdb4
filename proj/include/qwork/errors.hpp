#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qwork {

// Invalid arguments: bad particle counts, mismatched dimensions, unsupported
// schemes. The CLI maps these to a usage error.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A computed quantity violated a tolerance it must hold by construction
// (unitarity, Hermiticity, a real trace with an imaginary residue).
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConvergenceError : public NumericalFailure {
 public:
  using NumericalFailure::NumericalFailure;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qwork
