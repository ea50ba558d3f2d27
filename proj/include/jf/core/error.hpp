#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace jf {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invariant violation on a domain value; `field()` is a dotted path such as
// "edited_regions[0].x1".
class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& what)
      : Error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// A model reply that does not follow the requested output format.
class FormatError : public Error {
 public:
  using Error::Error;
};

class TransportError : public Error {
 public:
  TransportError(const std::string& what, bool retryable, int status = 0,
                 std::vector<std::string> attempts = {})
      : Error(what), retryable_(retryable), status_(status), attempts_(std::move(attempts)) {}

  bool retryable() const noexcept { return retryable_; }
  int status() const noexcept { return status_; }
  const std::vector<std::string>& attempts() const noexcept { return attempts_; }

 private:
  bool retryable_;
  int status_;
  std::vector<std::string> attempts_;
};

}  // namespace jf
