#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ripplerec {

std::vector<std::string> split(std::string_view s, char sep);

// Shortest decimal form that parses back to the same double. This is what
// makes write(parse(f)) idempotent byte-for-byte.
std::string format_double(double v);

// Strict full-token parse; nullopt when any character is left over.
std::optional<double> parse_double(std::string_view s);

}  // namespace ripplerec
