#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace jumplab {

/// 17 significant digits, so the text reads back as the same double.
std::string format_double(double v);

/// One CSV file: a header and string cells.
struct CsvTable {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    void add(std::vector<std::string> row);
    std::string render() const;
};

/// Writes `dir/<name>.csv`, creating the directory if needed.
std::filesystem::path write_csv(const std::filesystem::path& dir, const CsvTable& table);

}  // namespace jumplab
