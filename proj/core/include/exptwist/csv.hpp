#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace exptwist::csv {

// Doubles are serialized with %.17g so a CSV round trip is bit-exact.
std::string format_double(double x);

// One output table: fixed column order, rows of already-formatted cells.
class Writer {
public:
    explicit Writer(std::vector<std::string> columns);

    void add_row(const std::vector<std::string>& cells);
    void add_row(const std::vector<double>& values);

    std::string str() const;
    void write_file(const std::filesystem::path& path) const;

    std::size_t n_rows() const { return rows_.size(); }

private:
    std::vector<std::string> columns_;
    std::vector<std::vector<std::string>> rows_;
};

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    std::size_t column_index(const std::string& name) const;
    double number(std::size_t row, std::size_t col) const;
};

Table read_file(const std::filesystem::path& path);
Table parse(const std::string& text);

}  // namespace exptwist::csv
