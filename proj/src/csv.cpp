#include "peerlabel/csv.hpp"

namespace peerlabel::csv {

std::vector<Row> parse(std::string_view content, char delimiter) {
  std::vector<Row> rows;
  if (content.size() >= 3 && content.substr(0, 3) == "\xEF\xBB\xBF") content.remove_prefix(3);

  Row row;
  std::string cell;
  std::size_t line = 1;
  row.line = 1;
  bool in_quotes = false;
  bool cell_was_quoted = false;
  bool row_has_content = false;

  auto end_cell = [&] {
    row.cells.push_back(std::move(cell));
    cell.clear();
    cell_was_quoted = false;
  };
  auto end_row = [&](std::size_t next_line) {
    end_cell();
    if (row_has_content) rows.push_back(std::move(row));
    row = Row{};
    row.line = next_line;
    row_has_content = false;
  };

  for (std::size_t i = 0; i < content.size(); ++i) {
    const char c = content[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          cell += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        cell += c;
      }
      continue;
    }
    if (c == '"') {
      if (!cell.empty() || cell_was_quoted) throw CsvError("stray quote inside unquoted cell", row.line);
      in_quotes = true;
      cell_was_quoted = true;
      row_has_content = true;
    } else if (c == delimiter) {
      end_cell();
      row_has_content = true;
    } else if (c == '\r') {
      continue;
    } else if (c == '\n') {
      ++line;
      end_row(line);
    } else {
      if (cell_was_quoted) throw CsvError("text after closing quote", row.line);
      cell += c;
      row_has_content = true;
    }
  }
  if (in_quotes) throw CsvError("unterminated quoted cell", row.line);
  end_row(line);
  return rows;
}

std::string escape(std::string_view cell, char delimiter) {
  const bool needs_quotes = cell.find_first_of(std::string{'"', '\n', '\r', delimiter}) != std::string_view::npos ||
                            (!cell.empty() && (cell.front() == ' ' || cell.back() == ' '));
  if (!needs_quotes) return std::string(cell);
  std::string out = "\"";
  for (char c : cell) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string format_row(const std::vector<std::string>& cells, char delimiter) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += delimiter;
    out += escape(cells[i], delimiter);
  }
  out += '\n';
  return out;
}

}  // namespace peerlabel::csv
