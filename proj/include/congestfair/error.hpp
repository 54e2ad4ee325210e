#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace congestfair {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input file; carries the 1-based line it was detected on.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// A structurally well-formed input violating a model invariant
// (non-monotone utility, cap sums off, duplicate labels, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Evaluation outside the defined domain, e.g. utility below the clamp floor.
class DomainError : public Error {
 public:
  using Error::Error;
};

// An enumeration hit its guard; partial_count says how far it got.
class LimitError : public Error {
 public:
  LimitError(const std::string& what, unsigned long long partial_count)
      : Error(what), partial_count_(partial_count) {}
  unsigned long long partial_count() const { return partial_count_; }

 private:
  unsigned long long partial_count_;
};

// A solver exhausted its search space; indicates a bug, never expected input.
class SolverError : public Error {
 public:
  using Error::Error;
};

}  // namespace congestfair
