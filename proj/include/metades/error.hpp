#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace metades {

// Base for every error raised by the library.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file; row is 1-based and counts the header line when present.
class parse_error : public error {
 public:
  parse_error(std::size_t row, const std::string& what)
      : error("row " + std::to_string(row) + ": " + what), row_(row) {}

  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

class invalid_argument : public error {
 public:
  using error::error;
};

// Operation called on an object that was never fitted/trained.
class not_fitted : public error {
 public:
  using error::error;
};

}  // namespace metades
