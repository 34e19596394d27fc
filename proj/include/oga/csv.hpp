#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace oga::csv {

using Row = std::vector<std::string>;

/// Parses RFC 4180 style CSV: quoted fields may contain commas, doubled
/// quotes and line breaks.  A trailing CR before LF is tolerated.
std::vector<Row> parse(std::string_view text);

/// Reads a CSV file and checks that its first row equals `expected_header`.
/// Returns the data rows only.  Every row must have the header's width.
std::vector<Row> read_file(const std::filesystem::path& path,
                           const std::vector<std::string>& expected_header);

/// Quotes a field only when needed.
std::string escape(std::string_view field);

void write_row(std::ostream& out, const Row& row);

bool is_valid_utf8(std::string_view text) noexcept;

} // namespace oga::csv
