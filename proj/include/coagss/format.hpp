#pragma once

#include <charconv>
#include <string>
#include <system_error>

namespace coagss {

/// Shortest scientific representation that parses back to the same double.
/// Independent of the C locale.
inline std::string format_double(double v) {
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::scientific);
  return std::string(buf, r.ptr);
}

/// Parses a full string as a double; returns false on any trailing garbage.
inline bool parse_double(const std::string& s, double& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  const auto r = std::from_chars(first, last, out);
  return r.ec == std::errc() && r.ptr == last;
}

}  // namespace coagss
