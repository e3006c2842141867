#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace multiroi::text {

std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char delimiter);
/// Splits on runs of spaces/tabs.
std::vector<std::string_view> tokens(std::string_view s);

/// Whole-token parse; rejects trailing garbage.
std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);

/// Shortest representation that parses back to the same double.
std::string format_double(double v);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace multiroi::text
