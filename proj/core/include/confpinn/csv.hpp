#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace confpinn::csv {

/// Comma-separated table with a header row. Fields are plain tokens (no
/// quoting); every file this library writes fits that shape.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Column index by name; throws ParseError naming the missing column.
    std::size_t column(std::string_view name) const;
    bool has_column(std::string_view name) const;
    /// All values of a numeric column.
    std::vector<double> numbers(std::string_view name) const;
};

std::vector<std::string> split_line(std::string_view line);

/// Reads a header plus rows; blank lines are skipped, a row whose field count
/// differs from the header is a ParseError carrying the line number.
Table read(std::istream& in);

void write_row(std::ostream& out, const std::vector<std::string>& fields);

} // namespace confpinn::csv
