#include "csv.hpp"

#include <cmath>
#include <cstdlib>

#include "vibtrack/error.hpp"

namespace vibtrack::csv {
namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cell);
            cell.clear();
        } else if (c != '\r') {
            cell.push_back(c);
        }
    }
    cells.push_back(cell);
    for (auto& s : cells) {
        const auto b = s.find_first_not_of(" \t");
        const auto e = s.find_last_not_of(" \t");
        s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    }
    return cells;
}

}  // namespace

std::optional<std::size_t> Table::find_column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    return std::nullopt;
}

std::size_t Table::column(const std::string& name) const {
    if (auto c = find_column(name)) return *c;
    throw ParseError("CSV is missing column '" + name + "'");
}

double Table::number(std::size_t row, std::size_t col) const {
    const std::string& cell = rows.at(row).at(col);
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (cell.empty() || end != cell.c_str() + cell.size() || !std::isfinite(v)) {
        throw ParseError("CSV row " + std::to_string(row + 2) + ", column '" + header.at(col) +
                         "': not a number: '" + cell + "'");
    }
    return v;
}

Table read(std::istream& in) {
    Table table;
    std::string line;
    if (!std::getline(in, line)) throw ParseError("CSV is empty");
    table.header = split(line);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto cells = split(line);
        if (cells.size() != table.header.size()) {
            throw ParseError("CSV row " + std::to_string(line_no) + ": expected " +
                             std::to_string(table.header.size()) + " cells, found " + std::to_string(cells.size()));
        }
        table.rows.push_back(std::move(cells));
    }
    return table;
}

}  // namespace vibtrack::csv
