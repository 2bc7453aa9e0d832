#pragma once

#include <stdexcept>
#include <string>

namespace ptwb {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Syntax or semantic error in the input program. Maps to CLI exit status 1.
class InputError : public Error {
 public:
  InputError(std::string file, int line, const std::string& what)
      : Error(file + ":" + std::to_string(line) + ": " + what), file_(std::move(file)), line_(line) {}

  const std::string& file() const { return file_; }
  int line() const { return line_; }

 private:
  std::string file_;
  int line_;
};

/// An iteration, context or path budget was exhausted. Maps to exit status 2.
class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

/// An engine produced results that break a lattice invariant. Maps to exit status 3.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

inline int exit_code(const std::exception& e) {
  if (dynamic_cast<const BudgetExceeded*>(&e)) return 2;
  if (dynamic_cast<const InvariantViolation*>(&e)) return 3;
  return 1;
}

}  // namespace ptwb
