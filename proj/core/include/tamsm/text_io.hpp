#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tamsm::io {

/// One logical line of a text source with its 1-based line number.
struct Line {
  std::size_t number;
  std::string_view text;
};

/// Non-empty lines of `text` with surrounding whitespace trimmed. Lines whose
/// first non-blank character is '#' are dropped.
std::vector<Line> content_lines(std::string_view text);

std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);

std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);

/// Shortest representation that parses back to the identical double.
std::string format_exact(double x);
/// Twelve significant digits, the precision used for report files.
std::string format_report(double x);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);
bool file_exists(const std::string& path);

}  // namespace tamsm::io
