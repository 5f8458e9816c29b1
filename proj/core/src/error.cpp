#include "hscan/error.hpp"

#include <fmt/format.h>

namespace hscan {

namespace {
std::string describe(const std::string& path, std::size_t line, const std::string& message) {
  if (line == 0) return fmt::format("{}: {}", path, message);
  return fmt::format("{}:{}: {}", path, line, message);
}
}  // namespace

FormatError::FormatError(std::string path, std::size_t line, const std::string& message)
    : Error(describe(path, line, message)), path_(std::move(path)), line_(line) {}

}  // namespace hscan
