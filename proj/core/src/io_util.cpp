#include "srcattr/io_util.hpp"

#include <charconv>
#include <cmath>

#include "srcattr/error.hpp"

namespace srcattr::io {

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw Error(ErrorCode::IoError, "cannot format number");
  return std::string(buf, ptr);
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(s.substr(start));
      return out;
    }
    out.emplace_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

std::size_t parse_size(std::string_view s, std::size_t line_no) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw RecordError(ErrorCode::MalformedRecord, line_no,
                      "expected a non-negative integer, got '" + std::string(s) + "'");
  }
  return v;
}

long long parse_int(std::string_view s, std::size_t line_no) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw RecordError(ErrorCode::MalformedRecord, line_no,
                      "expected an integer, got '" + std::string(s) + "'");
  }
  return v;
}

double parse_double(std::string_view s, std::size_t line_no) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw RecordError(ErrorCode::MalformedRecord, line_no,
                      "expected a finite number, got '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace srcattr::io
