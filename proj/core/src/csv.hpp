#pragma once

// Minimal comma-separated reader shared by the series and truth loaders.

#include <cstddef>
#include <istream>
#include <optional>
#include <string>
#include <vector>

namespace vibtrack::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::optional<std::size_t> find_column(const std::string& name) const;
    /// Throws ParseError naming the missing column.
    std::size_t column(const std::string& name) const;
    /// Parses a cell as a finite number. Row numbers in errors are 1-based file
    /// lines (header is line 1).
    double number(std::size_t row, std::size_t col) const;
};

Table read(std::istream& in);

}  // namespace vibtrack::csv
