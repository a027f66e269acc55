#pragma once

#include <string>
#include <vector>

namespace stockcast {

// Minimal CSV support: comma separation, optional double-quote quoting,
// tolerant of trailing \r. Enough for the wide panel files and reports.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t n_cols() const { return header.size(); }
    std::size_t n_rows() const { return rows.size(); }
};

CsvTable read_csv(const std::string& path);
std::vector<std::string> split_csv_line(const std::string& line);

// Formats a double so that reloading reproduces the value exactly.
// Integral values print without a fractional part.
std::string format_number(double v);

} // namespace stockcast
