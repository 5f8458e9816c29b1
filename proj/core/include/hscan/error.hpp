#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hscan {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Missing files, malformed arguments, unusable input records.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A file that does not follow its documented format.
class FormatError : public Error {
 public:
  FormatError(std::string path, std::size_t line, const std::string& message);

  const std::string& path() const noexcept { return path_; }
  /// 1-based; 0 when the location is unknown.
  std::size_t line() const noexcept { return line_; }

 private:
  std::string path_;
  std::size_t line_;
};

/// A value that violates a domain invariant (e.g. junk label without a reason).
class ValidationError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

}  // namespace hscan
