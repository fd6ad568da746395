#include "explore/csv.hpp"

#include <cstdio>
#include <stdexcept>

namespace explore {

namespace {

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += "\"";
  return out;
}

}  // namespace

std::string csv_format_cell(const CsvCell& cell) {
  if (const auto* d = std::get_if<double>(&cell)) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", *d);
    return buf;
  }
  if (const auto* i = std::get_if<long long>(&cell)) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%lld", *i);
    return buf;
  }
  return quote_if_needed(std::get<std::string>(cell));
}

void emit_csv(const std::vector<std::string>& header,
              const std::vector<CsvRow>& rows, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw std::runtime_error("emit_csv: cannot open " + path + " for writing");
  std::string line;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) line += ',';
    line += quote_if_needed(header[i]);
  }
  line += '\n';
  std::fputs(line.c_str(), f);
  for (const CsvRow& row : rows) {
    if (row.size() != header.size()) {
      std::fclose(f);
      throw std::invalid_argument("emit_csv: row width does not match header");
    }
    line.clear();
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) line += ',';
      line += csv_format_cell(row[i]);
    }
    line += '\n';
    std::fputs(line.c_str(), f);
  }
  std::fclose(f);
}

}  // namespace explore
