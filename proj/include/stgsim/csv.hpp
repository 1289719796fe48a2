#pragma once

#include <charconv>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace stgsim {

// Shortest representation that round-trips exactly through from_chars.
inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, const std::string& context) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw std::runtime_error("bad numeric field '" + std::string(s) + "' in " + context);
  }
  return v;
}

inline int64_t parse_int(std::string_view s, const std::string& context) {
  int64_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw std::runtime_error("bad integer field '" + std::string(s) + "' in " + context);
  }
  return v;
}

// Splits one CSV line on commas. Fields in this project never contain commas
// or quotes, so no quoting rules are needed; embedded CR from CRLF files is
// stripped.
std::vector<std::string> split_csv_line(std::string_view line);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name, const std::string& context) const;
};

CsvTable read_csv(const std::string& path);
void write_lines(const std::string& path, const std::vector<std::string>& lines);

}  // namespace stgsim
