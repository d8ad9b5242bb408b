#pragma once

#include <stdexcept>
#include <string>

namespace autoconfidence {

// Bad input data or violated precondition. Maps to CLI exit status 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed payload from a source; carries the offending record index when known.
class ParseError : public ValidationError {
 public:
  ParseError(const std::string& what, long record_index = -1)
      : ValidationError(what), record_index_(record_index) {}
  long record_index() const noexcept { return record_index_; }

 private:
  long record_index_;
};

// Network or remote endpoint failure after retries. Maps to CLI exit status 2.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical routine failed (e.g. Newton step-halving exhausted).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace autoconfidence
