#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

// Small helpers shared by the line-oriented file formats.
namespace srcattr::io {

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

std::vector<std::string> split(std::string_view s, char sep);

std::size_t parse_size(std::string_view s, std::size_t line_no);
double parse_double(std::string_view s, std::size_t line_no);
long long parse_int(std::string_view s, std::size_t line_no);

}  // namespace srcattr::io
