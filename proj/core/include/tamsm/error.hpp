#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tamsm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text (cohort CSVs, design and acceleration specs, configs).
/// Carries the offending subject and 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::string subject_id = {},
             std::size_t line = 0)
      : Error(format(message, subject_id, line)),
        subject_id_(std::move(subject_id)),
        line_(line) {}

  const std::string& subject_id() const noexcept { return subject_id_; }
  std::size_t line() const noexcept { return line_; }

 private:
  static std::string format(const std::string& message,
                            const std::string& subject_id, std::size_t line) {
    std::string out = message;
    if (!subject_id.empty()) out += " (subject " + subject_id + ")";
    if (line != 0) out += " (line " + std::to_string(line) + ")";
    return out;
  }

  std::string subject_id_;
  std::size_t line_;
};

/// A model cannot be fitted or evaluated on the given data.
class ModelError : public Error {
 public:
  using Error::Error;
};

}  // namespace tamsm
