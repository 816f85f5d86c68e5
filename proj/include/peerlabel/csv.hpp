#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace peerlabel::csv {

struct CsvError : std::runtime_error {
  std::size_t line;
  CsvError(const std::string& what, std::size_t line_) : std::runtime_error(what), line(line_) {}
};

struct Row {
  std::size_t line = 0;  // 1-based physical line where the record starts
  std::vector<std::string> cells;
};

// RFC 4180 records. Quoted cells may span lines; "" escapes a quote.
std::vector<Row> parse(std::string_view content, char delimiter = ',');

std::string escape(std::string_view cell, char delimiter = ',');
std::string format_row(const std::vector<std::string>& cells, char delimiter = ',');

}  // namespace peerlabel::csv
