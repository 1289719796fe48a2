#include "stgsim/csv.hpp"

#include <fstream>

namespace stgsim {

std::vector<std::string> split_csv_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string> fields;
  size_t start = 0;
  for (;;) {
    size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      fields.emplace_back(line.substr(start));
      break;
    }
    fields.emplace_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

int CsvTable::column(const std::string& name, const std::string& context) const {
  for (size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  throw std::runtime_error("missing column '" + name + "' in " + context);
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty file " + path);
  table.header = split_csv_line(line);
  while (std::getline(in, line)) {
    if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != table.header.size()) {
      throw std::runtime_error("row with " + std::to_string(fields.size()) + " fields, expected " +
                               std::to_string(table.header.size()) + " in " + path);
    }
    table.rows.push_back(std::move(fields));
  }
  return table;
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& l : lines) out << l << '\n';
  if (!out) throw std::runtime_error("write failed for " + path);
}

}  // namespace stgsim
