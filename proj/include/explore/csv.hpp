#pragma once

#include <string>
#include <variant>
#include <vector>

namespace explore {

using CsvCell = std::variant<double, long long, std::string>;
using CsvRow = std::vector<CsvCell>;

/// RFC-4180-style CSV: header row, '.' decimal separator, 12 significant
/// digits for doubles, LF line endings, fields quoted only when needed.
/// Byte output is deterministic for fixed inputs.
void emit_csv(const std::vector<std::string>& header,
              const std::vector<CsvRow>& rows, const std::string& path);

std::string csv_format_cell(const CsvCell& cell);

}  // namespace explore
