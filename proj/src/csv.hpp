#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dpanel::csv {

// Splits one CSV record. Handles double-quoted fields with "" escapes.
std::vector<std::string> split_line(std::string_view line);
std::vector<std::string> split_lines(std::string_view text);

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
std::string to_upper(std::string_view s);

// Whole-field numeric parse; rejects trailing garbage.
std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);

std::string format_double(double v);
std::string quote_if_needed(const std::string& field);

std::string read_file(const std::string& path);

}  // namespace dpanel::csv
