#pragma once

#include <stdexcept>
#include <string>

namespace mtd {

// Validation failures: bad configuration, out-of-range queries, bad operands,
// malformed files. The CLI maps all of these to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, int line, const std::string& what)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " + what),
        line_(line) {}

  int line() const { return line_; }

 private:
  int line_;
};

// Missing or unreadable files (exit code 2).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A structural invariant of a run log or evaluation was violated (exit code 3).
class IntegrityError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace mtd
