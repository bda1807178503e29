#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace isaac::csv {

using Row = std::vector<std::string>;

// RFC 4180 reader: quoted fields may contain commas, doubled quotes and
// newlines. A trailing newline does not produce an empty row; CRLF is accepted.
std::vector<Row> parse(std::string_view text);

// Header-indexed view of a parsed file. Column lookup is case-insensitive
// and ignores surrounding whitespace.
class Table {
 public:
  explicit Table(std::vector<Row> rows);

  const Row& header() const { return header_; }
  const std::vector<Row>& rows() const { return rows_; }
  std::optional<std::size_t> column(std::string_view name) const;
  // Returns the cell, or an empty string when the row is short.
  std::string_view cell(const Row& row, std::size_t column) const;

 private:
  Row header_;
  std::vector<Row> rows_;
};

std::string escape(std::string_view field);
std::string format_row(const Row& row);

}  // namespace isaac::csv
