#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace mspl::csv {

struct Row {
    std::size_t line = 0;  // 1-based line number in the source file
    std::vector<std::string> fields;
};

struct Table {
    std::vector<std::string> header;
    std::vector<Row> rows;

    /// Index of a header column; throws DataError if absent.
    std::size_t column(std::string_view name) const;
};

/// Reads a comma-separated file with a header row. Fields are trimmed of
/// surrounding whitespace and a trailing '\r'. Quoting is not supported.
Table read(const std::filesystem::path& path);
Table parse(std::istream& in, const std::string& source);

double parse_double(std::string_view field, const std::string& source, std::size_t line);
long long parse_int(std::string_view field, const std::string& source, std::size_t line);

/// Shortest-safe round-trip representation (17 significant digits).
std::string format_double(double v);

}  // namespace mspl::csv
