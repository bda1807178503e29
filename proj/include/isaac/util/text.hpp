#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace isaac::text {

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);
// Lowercase, trim, and collapse internal whitespace runs to a single space.
std::string normalize(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

// Strict number parse: the whole (trimmed) string must be consumed.
std::optional<double> parse_double(std::string_view s);

// Shortest representation that round-trips through parse_double.
std::string format_double(double value);

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t value);

}  // namespace isaac::text
