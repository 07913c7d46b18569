#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace pinlab::csv {

using Row = std::vector<std::string>;

/// RFC 4180 field quoting: quoted only when the field contains a comma, quote, or newline.
std::string quote(std::string_view field);

std::string format_row(Row const& row);

/// Parse a whole CSV document. Quoted fields may span lines.
std::vector<Row> parse(std::string_view text);

std::vector<Row> read_file(std::filesystem::path const& path);

/// Write rows atomically enough for our purposes: truncate, write, flush, check.
void write_file(std::filesystem::path const& path, std::vector<Row> const& rows);

/// Shortest round-trippable decimal for a double; NaN renders as an empty field.
std::string number(double x);

/// Fixed-precision rendering used in human-facing tables.
std::string fixed(double x, int digits);

double parse_number(std::string const& field);

}  // namespace pinlab::csv
