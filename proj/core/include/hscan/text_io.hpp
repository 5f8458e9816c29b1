#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hscan {

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file, fsyncs, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Reads a whole gzip member. Throws InputError on I/O failure and
/// FormatError if the stream is corrupt or truncated.
std::string read_gzip_file(const std::filesystem::path& path);
std::string gzip_compress(std::string_view content);
void write_gzip_file(const std::filesystem::path& path, std::string_view content);

/// Splits on '\n', dropping a trailing '\r' from each line. A final line
/// without a newline is still returned.
std::vector<std::string_view> split_lines(std::string_view text);
std::vector<std::string_view> split(std::string_view text, char sep);
std::vector<std::string_view> split_whitespace(std::string_view text);
std::string_view trim(std::string_view text);
std::string to_lower_ascii(std::string_view text);

std::optional<long long> parse_int(std::string_view text);
std::optional<double> parse_double(std::string_view text);

/// Shortest representation that parses back to the same double.
std::string format_double(double value);
/// Nine significant digits.
std::string format_sig9(double value);

/// RFC 4180 style field quoting when needed.
std::string csv_escape(std::string_view field);
/// Parses one CSV record (no embedded newlines).
std::vector<std::string> parse_csv_record(std::string_view line);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> row_lines;  // 1-based source line per row

  /// Index of a header column; throws FormatError naming `path` when absent.
  std::size_t column(std::string_view name, const std::string& path) const;
};

/// Reads a CSV file with a header row. Rows with a different field count
/// than the header are a FormatError.
CsvTable read_csv(const std::filesystem::path& path);

/// 64-bit FNV-1a, rendered as 16 lowercase hex digits by hex_digest().
std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex_digest(std::uint64_t value);

std::string utc_timestamp();

}  // namespace hscan
